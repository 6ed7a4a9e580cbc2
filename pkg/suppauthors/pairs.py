"""
Selection of the publication -> supplement pairs to analyse:
linked publications, IsSupplementedBy pairs, and removal of the pairs
created by merged records sharing a generic title.
"""

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field

import pandas

from suppauthors.model import (SupplementPair, ConfigError, PUBLICATION, SUPPLEMENT_KINDS,
                               IS_SUPPLEMENTED_BY, ASSERTED)
from suppauthors.ingest import normalize_title

logger = logging.getLogger(__name__)

NOISE_BLOCKLIST = 'blocklist'
NOISE_GENERIC_FANIN = 'generic-fanin'
DEFAULT_BLOCKLIST = frozenset(['index data'])


def index_products(products):
    """Map {id: product}. With repeated ids, the first one wins."""
    index = {}
    for p in products:
        index.setdefault(p.id, p)
    return index

def _as_index(products):
    return products if isinstance(products, dict) else index_products(products)

def orient(relation, index):
    """(publication, supplement) for a relation between a publication and a
    dataset/software, whichever way it points. None if an endpoint is missing
    or the kinds do not fit."""
    a = index.get(relation.source_id)
    b = index.get(relation.target_id)
    if a is None or b is None:
        return None
    if a.kind == PUBLICATION and b.kind in SUPPLEMENT_KINDS:
        return (a, b)
    if b.kind == PUBLICATION and a.kind in SUPPLEMENT_KINDS:
        return (b, a)
    return None


######################  Linked publications  #######################


def select_linked_publications(products, relations):
    """Ids of the publications with at least one relation, of any type and
    in either direction, to a dataset or a software."""
    index = _as_index(products)
    linked = set()
    for r in relations:
        pd = orient(r, index)
        if pd is not None:
            linked.add(pd[0].id)
    return linked


########################  Supplement pairs  ########################


class PairDiagnostics(object):
    def __init__(self):
        self.counts = Counter()
        self.dangling = []   # relations with an endpoint absent from the products

    def to_dict(self):
        return {'counts': dict(sorted(self.counts.items())),
                'dangling': [r.to_dict() for r in self.dangling]}

    def __repr__(self):
        return "<PairDiagnostics %s>" % dict(sorted(self.counts.items()))


def select_supplement_pairs(products, relations, diagnostics=None):
    """One SupplementPair per publication/supplement linked by IsSupplementedBy,
    sorted by (publication id, supplement id)."""
    index = _as_index(products)
    diag = diagnostics if diagnostics is not None else PairDiagnostics()
    found = {}
    for r in relations:
        if r.semantics.label != IS_SUPPLEMENTED_BY:
            continue
        diag.counts['supplement_relations'] += 1
        if r.source_id not in index or r.target_id not in index:
            diag.counts['dangling'] += 1
            diag.dangling.append(r)
            logger.debug("Dangling relation %s -> %s", r.source_id, r.target_id)
            continue
        pd = orient(r, index)
        if pd is None:
            diag.counts['kind_mismatch'] += 1
            continue
        key = (pd[0].id, pd[1].id)
        if key in found:
            diag.counts['duplicate'] += 1
            if found[key].provenance == ASSERTED or r.provenance != ASSERTED:
                continue
        found[key] = SupplementPair(pd[0], pd[1], r.provenance)
    pairs = [found[k] for k in sorted(found)]
    diag.counts['pairs'] = len(pairs)
    if diag.counts['dangling']:
        logger.info("%d IsSupplementedBy relations point to unknown products", diag.counts['dangling'])
    return pairs


##########################  Dedup noise  ###########################


@dataclass(frozen=True)
class NoisePolicy:
    generic_title_blocklist: frozenset = DEFAULT_BLOCKLIST
    fanin_threshold: int = 5
    min_title_length: int = 12

    def __post_init__(self):
        if self.fanin_threshold < 2:
            raise ConfigError("fanin_threshold must be >= 2")
        if self.min_title_length < 1:
            raise ConfigError("min_title_length must be positive")
        object.__setattr__(self, 'generic_title_blocklist',
                           frozenset(normalize_title(t) for t in self.generic_title_blocklist))


def load_blocklist(path):
    """Normalized titles from a text file: one per line, '#' starts a comment."""
    titles = set()
    with open(path, encoding='utf-8') as f:
        for line in f:
            line = line.split('#', 1)[0].strip()
            if line:
                titles.add(normalize_title(line))
    return frozenset(titles)


def detect_dedup_noise(pairs, products, policy=None):
    """Split *pairs* into (kept, flagged). Flagged items are (pair, reason).

    A pair is flagged when its supplement's normalized title is blocklisted,
    or when the title is shorter than policy.min_title_length and the
    supplement is supplementing at least policy.fanin_threshold distinct
    publications."""
    policy = policy or NoisePolicy()
    index = _as_index(products) if products is not None else {}
    fanin = defaultdict(set)   # one sequential pass
    for pair in pairs:
        fanin[pair.supplement.id].add(pair.publication.id)
    kept = []
    flagged = []
    for pair in pairs:
        supplement = index.get(pair.supplement.id, pair.supplement)
        title = normalize_title(supplement.title)
        if title in policy.generic_title_blocklist:
            flagged.append((pair, NOISE_BLOCKLIST))
        elif len(title) < policy.min_title_length and len(fanin[supplement.id]) >= policy.fanin_threshold:
            flagged.append((pair, NOISE_GENERIC_FANIN))
        else:
            kept.append(pair)
    if flagged:
        logger.info("Flagged %d of %d pairs as deduplication noise", len(flagged), len(pairs))
    return kept, flagged


NOISE_COLUMNS = ['publication_id', 'supplement_id', 'supplement_title', 'reason']

def noise_table(flagged):
    rows = [(p.publication.id, p.supplement.id, p.supplement.title, reason) for p, reason in flagged]
    return pandas.DataFrame(rows, columns=NOISE_COLUMNS)

def write_noise_csv(flagged, path):
    noise_table(flagged).to_csv(path, index=False, lineterminator='\r\n')
