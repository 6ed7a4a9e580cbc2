# Unitesting modules #
import unittest
import os
import tempfile

# Nosetest flag #
__test__ = True

from suppauthors.model import *
from suppauthors.ingest import read_products, read_relations
from suppauthors.pairs import *

testfiles = os.path.join(os.path.dirname(os.path.abspath(__file__)), os.pardir, 'testfiles')


def product(pid, kind, title='Some reasonably long title'):
    return ResearchProduct(pid, kind, title, AuthorList.from_pairs([(1, 'a')]), '2020')

def rel(source, target, label=IS_SUPPLEMENTED_BY, provenance=ASSERTED):
    return Relation(source, target, Semantics(label), provenance)


class Test_Linked(unittest.TestCase):
    def test_any_relation_either_way(self):
        products = [product('p1', PUBLICATION), product('p2', PUBLICATION), product('p3', PUBLICATION),
                    product('d1', DATASET), product('s1', SOFTWARE)]
        relations = [rel('p1', 'd1', 'HasPart'), rel('s1', 'p2', CITES), rel('p3', 'p1', CITES)]
        self.assertSetEqual(select_linked_publications(products, relations), set(['p1', 'p2']))

    def test_fixture(self):
        products, _ = read_products(os.path.join(testfiles, 'products.jsonl'))
        relations, _ = read_relations(os.path.join(testfiles, 'relations.jsonl'))
        self.assertEqual(len(select_linked_publications(products, relations)), 8)


class Test_Supplement_Pairs(unittest.TestCase):
    def setUp(self):
        self.products = [product('p1', PUBLICATION), product('p2', PUBLICATION),
                         product('d1', DATASET), product('s1', SOFTWARE)]

    def test_orientation_and_order(self):
        relations = [rel('s1', 'p2'), rel('p1', 'd1'), rel('p1', 'p2'), rel('p2', 'd1', CITES)]
        diag = PairDiagnostics()
        pairs = select_supplement_pairs(self.products, relations, diag)
        self.assertListEqual([p.key for p in pairs], [('p1', 'd1'), ('p2', 's1')])
        self.assertEqual(pairs[1].kind, SOFTWARE)
        self.assertEqual(diag.counts['kind_mismatch'], 1)

    def test_both_directions_collapse(self):
        relations = [rel('p1', 'd1', provenance=INFERRED), rel('d1', 'p1')]
        diag = PairDiagnostics()
        pairs = select_supplement_pairs(self.products, relations, diag)
        self.assertEqual(len(pairs), 1)
        self.assertEqual(pairs[0].provenance, ASSERTED)
        self.assertEqual(diag.counts['duplicate'], 1)

    def test_dangling(self):
        diag = PairDiagnostics()
        pairs = select_supplement_pairs(self.products, [rel('p1', 'd404'), rel('p1', 'd1')], diag)
        self.assertEqual(len(pairs), 1)
        self.assertEqual(diag.counts['dangling'], 1)
        self.assertEqual(diag.dangling[0].target_id, 'd404')

    def test_fixture(self):
        products, _ = read_products(os.path.join(testfiles, 'products.jsonl'))
        relations, _ = read_relations(os.path.join(testfiles, 'relations.jsonl'))
        diag = PairDiagnostics()
        pairs = select_supplement_pairs(products, relations, diag)
        self.assertEqual(len(pairs), 10)
        self.assertEqual(diag.counts['dangling'], 1)
        self.assertIn(('P8', 'S2'), [p.key for p in pairs])


class Test_Noise(unittest.TestCase):
    def test_blocklist(self):
        pubs = [product('p%d' % i, PUBLICATION) for i in range(2)]
        generic = product('d1', DATASET, '  INDEX data ')
        real = product('d2', DATASET)
        pairs = [SupplementPair(pubs[0], generic), SupplementPair(pubs[1], generic), SupplementPair(pubs[0], real)]
        kept, flagged = detect_dedup_noise(pairs, pubs + [generic, real])
        self.assertListEqual([p.key for p in kept], [('p0', 'd2')])
        self.assertListEqual([r for p, r in flagged], [NOISE_BLOCKLIST, NOISE_BLOCKLIST])

    def test_generic_fanin(self):
        pubs = [product('p%d' % i, PUBLICATION) for i in range(5)]
        short = product('d1', DATASET, 'Data')
        pairs = [SupplementPair(p, short) for p in pubs]
        kept, flagged = detect_dedup_noise(pairs, pubs + [short])
        self.assertEqual(len(kept), 0)
        self.assertTrue(all(r == NOISE_GENERIC_FANIN for p, r in flagged))
        # below the fan-in threshold the short title is kept
        kept, flagged = detect_dedup_noise(pairs[:4], pubs + [short])
        self.assertEqual((len(kept), len(flagged)), (4, 0))
        # a long title is kept whatever its fan-in
        long = product('d2', DATASET, 'A perfectly specific dataset title')
        kept, flagged = detect_dedup_noise([SupplementPair(p, long) for p in pubs], None)
        self.assertEqual(len(flagged), 0)

    def test_policy(self):
        self.assertRaises(ConfigError, NoisePolicy, fanin_threshold=1)
        policy = NoisePolicy(generic_title_blocklist=['Supplementary  Material'])
        self.assertIn('supplementary material', policy.generic_title_blocklist)

    def test_load_blocklist_and_csv(self):
        titles = load_blocklist(os.path.join(testfiles, 'blocklist.txt'))
        self.assertIn('index data', titles)
        self.assertFalse(any(t.startswith('#') for t in titles))
        pub = product('p1', PUBLICATION)
        generic = product('d1', DATASET, 'Index data')
        kept, flagged = detect_dedup_noise([SupplementPair(pub, generic)], [pub, generic],
                                           NoisePolicy(generic_title_blocklist=titles))
        fd, path = tempfile.mkstemp(suffix='.csv')
        os.close(fd)
        try:
            write_noise_csv(flagged, path)
            with open(path, 'rb') as f:
                content = f.read()
            self.assertEqual(content, b'publication_id,supplement_id,supplement_title,reason\r\n'
                                      b'p1,d1,Index data,blocklist\r\n')
        finally:
            os.remove(path)

    def test_fewer_rules_flag_fewer_pairs(self):
        pubs = [product('p%d' % i, PUBLICATION) for i in range(8)]
        titles = ['Index data', 'Figure 1', 'Dataset', 'Supplementary material', 'Raw',
                  'Long and specific survey title']
        supplements = [product('d%d' % i, DATASET, t) for i, t in enumerate(titles)]
        pairs = [SupplementPair(p, d) for i, d in enumerate(supplements) for p in pubs[:i+2]]
        products = pubs + supplements
        blocklists = [titles[:k] for k in range(len(titles), -1, -1)]
        previous = None
        for blocklist in blocklists:
            flagged = set(p.key for p, r in detect_dedup_noise(pairs, products,
                          NoisePolicy(generic_title_blocklist=blocklist))[1])
            if previous is not None:
                self.assertTrue(flagged <= previous, blocklist)
            previous = flagged
        previous = None
        for threshold in range(2, 10):
            flagged = set(p.key for p, r in detect_dedup_noise(pairs, products,
                          NoisePolicy(generic_title_blocklist=[], fanin_threshold=threshold))[1])
            if previous is not None:
                self.assertTrue(flagged <= previous, threshold)
            previous = flagged
        self.assertSetEqual(previous, set())
