"""
Aggregate statistics over annotated pairs and their export.

A ReportSummary only stores raw counts; every percentage is derived from
them (round half up, 2 decimals) so stored and recomputed values agree.
"""

import json
import logging
import os
from decimal import Decimal, ROUND_HALF_UP
from dataclasses import dataclass, field, replace

import pandas

from suppauthors.model import (SupplementPair, VariationAnnotation, DATASET, SOFTWARE,
                               NON_ADJACENT, EXCEPTION_CLASSES)

logger = logging.getLogger(__name__)

COMBINED = 'combined'
EVENTS = ('A', 'R', 'S')
EVENT_NAMES = {'A': 'addition', 'R': 'removal', 'S': 'shuffle'}
COMBOS = ('A', 'R', 'S', 'A+R', 'A+S', 'R+S', 'A+R+S')
FORMATS = ('json', 'csv')


def pct(count, total):
    """100*count/total rounded half up to 2 decimals; 0 when total is 0."""
    if not total:
        return 0.0
    value = Decimal(count) * 100 / Decimal(total)
    return float(value.quantize(Decimal('0.01'), rounding=ROUND_HALF_UP))


def _zero_combos():
    return dict((c, 0) for c in COMBOS)


@dataclass(frozen=True)
class ReportSummary:
    kind: str = COMBINED
    total_pairs: int = 0
    combo_counts: dict = field(default_factory=_zero_combos)
    exception_counts: dict = field(default_factory=dict)
    shuffle_nonadjacent_count: int = 0

    def __post_init__(self):
        combos = _zero_combos()
        for c, n in self.combo_counts.items():
            if c not in combos:
                raise ValueError("Unknown event combination %r" % c)
            combos[c] = int(n)
        object.__setattr__(self, 'combo_counts', combos)
        exceptions = dict((e, 0) for e in EXCEPTION_CLASSES)
        exceptions.update((e, int(n)) for e, n in self.exception_counts.items())
        object.__setattr__(self, 'exception_counts', dict(sorted(exceptions.items())))
        if self.varied_pairs > self.total_pairs:
            raise ValueError("More varied pairs (%d) than pairs (%d)" % (self.varied_pairs, self.total_pairs))
        if self.shuffle_nonadjacent_count > self.event_counts['S']:
            raise ValueError("More non-adjacent shuffles than shuffles")

    @classmethod
    def empty(cls, kind=COMBINED):
        return cls(kind=kind)

    @property
    def is_empty(self):
        return self.total_pairs == 0

    @property
    def varied_pairs(self):
        return sum(self.combo_counts.values())

    @property
    def unvaried_pairs(self):
        return self.total_pairs - self.varied_pairs

    @property
    def event_counts(self):
        return dict((e, sum(n for c, n in self.combo_counts.items() if e in c.split('+'))) for e in EVENTS)

    @property
    def total_events(self):
        return sum(self.event_counts.values())

    @property
    def multi_event_pairs(self):
        return sum(n for c, n in self.combo_counts.items() if '+' in c)

    @property
    def excepted_pairs(self):
        return sum(self.exception_counts.values())

    @property
    def varied_pct(self):
        return pct(self.varied_pairs, self.total_pairs)

    @property
    def unvaried_pct(self):
        return pct(self.unvaried_pairs, self.total_pairs)

    @property
    def event_pcts(self):
        total = self.total_events
        return dict((e, pct(n, total)) for e, n in self.event_counts.items())

    @property
    def multi_event_pct(self):
        return pct(self.multi_event_pairs, self.varied_pairs)

    @property
    def shuffle_nonadjacent_pct(self):
        return pct(self.shuffle_nonadjacent_count, self.event_counts['S'])

    def to_dict(self):
        events = self.event_counts
        pcts = self.event_pcts
        return {
            'kind': self.kind,
            'total_pairs': self.total_pairs,
            'varied_pairs': self.varied_pairs,
            'varied_pct': self.varied_pct,
            'unvaried_pairs': self.unvaried_pairs,
            'unvaried_pct': self.unvaried_pct,
            'total_events': self.total_events,
            'event_counts': dict((EVENT_NAMES[e], events[e]) for e in EVENTS),
            'event_pcts': dict((EVENT_NAMES[e], pcts[e]) for e in EVENTS),
            'combo_counts': dict((c, self.combo_counts[c]) for c in COMBOS),
            'multi_event_pairs': self.multi_event_pairs,
            'multi_event_pct': self.multi_event_pct,
            'exception_counts': self.exception_counts,
            'shuffle_nonadjacent_count': self.shuffle_nonadjacent_count,
            'shuffle_nonadjacent_pct': self.shuffle_nonadjacent_pct,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(kind=d['kind'], total_pairs=d['total_pairs'], combo_counts=d['combo_counts'],
                   exception_counts=d.get('exception_counts', {}),
                   shuffle_nonadjacent_count=d.get('shuffle_nonadjacent_count', 0))


#########################  Aggregation  ############################


def summarize(annotations, kind=COMBINED):
    """ReportSummary of (SupplementPair, VariationAnnotation) items whose
    supplement is of *kind* ('dataset', 'software' or 'combined' for all).
    Excepted pairs count among the unvaried ones."""
    total = 0
    combos = _zero_combos()
    exceptions = dict((e, 0) for e in EXCEPTION_CLASSES)
    nonadjacent = 0
    for pair, ann in annotations:
        if kind != COMBINED and pair.supplement.kind != kind:
            continue
        total += 1
        if ann.exception is not None:
            exceptions[ann.exception] += 1
        if ann.varied:
            combos[ann.combo] += 1
        if ann.shuffle_adjacency == NON_ADJACENT:
            nonadjacent += 1
    return ReportSummary(kind=kind, total_pairs=total, combo_counts=combos,
                         exception_counts=exceptions, shuffle_nonadjacent_count=nonadjacent)


def merge(a, b):
    """Field-wise sum of two summaries over disjoint pairs.
    The kind is kept when both agree (or one side is empty), else 'combined'."""
    if a.is_empty:
        kind = b.kind
    elif b.is_empty:
        kind = a.kind
    else:
        kind = a.kind if a.kind == b.kind else COMBINED
    exceptions = dict(a.exception_counts)
    for e, n in b.exception_counts.items():
        exceptions[e] = exceptions.get(e, 0) + n
    return ReportSummary(
        kind=kind,
        total_pairs=a.total_pairs + b.total_pairs,
        combo_counts=dict((c, a.combo_counts[c] + b.combo_counts[c]) for c in COMBOS),
        exception_counts=exceptions,
        shuffle_nonadjacent_count=a.shuffle_nonadjacent_count + b.shuffle_nonadjacent_count)


def summarize_all(annotations):
    """{'dataset': ..., 'software': ..., 'combined': ...}; combined is the merge of the other two."""
    annotations = list(annotations)
    dataset = summarize(annotations, DATASET)
    software = summarize(annotations, SOFTWARE)
    return {DATASET: dataset, SOFTWARE: software,
            COMBINED: replace(merge(dataset, software), kind=COMBINED)}


def headline(summary):
    return "Pairs with authorship variations: %d/%d (%.2f%%)" % (
        summary.varied_pairs, summary.total_pairs, summary.varied_pct)


############################  Export  ##############################


PAIR_COLUMNS = ['publication_id', 'supplement_id', 'kind', 'provenance', 'addition', 'removal',
                'shuffle', 'exception', 'shuffle_adjacency', 'matched', 'match_methods']
COMBO_COLUMNS = ['combo', 'count']

def _flag(b):
    return 1 if b else 0

def pairs_table(annotations):
    rows = [(p.publication.id, p.supplement.id, p.supplement.kind, p.provenance,
             _flag(a.addition), _flag(a.removal), _flag(a.shuffle), a.exception_label,
             a.shuffle_adjacency or '', a.matched, '|'.join(sorted(a.methods)))
            for p, a in annotations]
    return pandas.DataFrame(rows, columns=PAIR_COLUMNS)

def combos_table(summary):
    """Event combinations in A, R, S, A+R, A+S, R+S, A+R+S order; no rows for an empty summary."""
    rows = [] if summary.is_empty else [(c, summary.combo_counts[c]) for c in COMBOS]
    table = pandas.DataFrame(rows, columns=COMBO_COLUMNS)
    if int(table['count'].sum()) != summary.varied_pairs:
        raise ValueError("Combination counts do not add up to the varied pairs")
    return table


def _write(path, write):
    try:
        write(path)
    except (IOError, OSError) as e:
        raise IOError("Cannot write %s: %s" % (path, e))
    return path

def write_summary_json(summaries, path):
    """*summaries* is one ReportSummary or a {kind: ReportSummary} dict."""
    if isinstance(summaries, ReportSummary):
        data = summaries.to_dict()
    else:
        data = dict((k, s.to_dict()) for k, s in summaries.items())
    def write(p):
        with open(p, 'w', encoding='utf-8') as f:
            f.write(json.dumps(data, indent=2, sort_keys=True) + '\n')
    return _write(path, write)

def export(summary, annotations, out_dir, formats=FORMATS):
    """Write summary.json ('json') and pairs.csv + combos.csv ('csv') into *out_dir*.
    *summary* is the one used for combos.csv; a {kind: summary} dict writes all
    kinds into summary.json and takes the combined one for combos.csv.
    Return the written paths."""
    unknown = set(formats) - set(FORMATS)
    if unknown:
        raise ValueError("Unknown export formats: %s" % ', '.join(sorted(unknown)))
    main = summary[COMBINED] if isinstance(summary, dict) else summary
    if not os.path.isdir(out_dir):
        try:
            os.makedirs(out_dir)
        except OSError as e:
            raise IOError("Cannot create %s: %s" % (out_dir, e))
    written = []
    if 'json' in formats:
        written.append(write_summary_json(summary, os.path.join(out_dir, 'summary.json')))
    if 'csv' in formats:
        ptab = pairs_table(annotations)
        ctab = combos_table(main)
        written.append(_write(os.path.join(out_dir, 'pairs.csv'),
                              lambda p: ptab.to_csv(p, index=False, lineterminator='\r\n')))
        written.append(_write(os.path.join(out_dir, 'combos.csv'),
                              lambda p: ctab.to_csv(p, index=False, lineterminator='\r\n')))
    logger.info("Wrote %s", ', '.join(written))
    return written


#######################  Annotation files  #########################


def write_annotations(annotations, path):
    """One JSON line per pair: the full pair and its annotation."""
    with open(path, 'w', encoding='utf-8') as f:
        for pair, ann in annotations:
            f.write(json.dumps({'pair': pair.to_dict(), 'annotation': ann.to_dict()}, sort_keys=True) + '\n')

def read_annotations(path):
    annotations = []
    with open(path, encoding='utf-8') as f:
        for line in f:
            if line.strip():
                d = json.loads(line)
                annotations.append((SupplementPair.from_dict(d['pair']),
                                    VariationAnnotation.from_dict(d['annotation'])))
    return annotations
