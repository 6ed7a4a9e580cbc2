"""
Retrofit of missing IsSupplementedBy relations from Cites/References ones.

Two ways to decide that a citation really links a publication to its
supplementary material:
 - the date-author rule: both dates known and at most window_days apart,
   and at least min_shared_authors authors in common;
 - the interval rule: the pair's feature-vector score falls inside the
   mean +/- k*sigma interval of the scores of known supplement pairs.
"""

import json
import logging
from collections import Counter
from dataclasses import dataclass

import numpy

from suppauthors.model import (Relation, Semantics, ConfigError, IS_SUPPLEMENTED_BY, CITES,
                               REFERENCES, INFERRED, ASSERTED)
from suppauthors.ingest import normalize_title
from suppauthors.pairs import index_products, orient
from suppauthors.diff import MatchConfig, match_author_sets

logger = logging.getLogger(__name__)

RULE_DATE_AUTHOR = 'date-author'
RULE_INTERVAL = 'interval'
CITATION_SEMANTICS = (CITES, REFERENCES)


@dataclass(frozen=True)
class RetrofitRuleConfig:
    window_days: int = 183      # six months
    min_shared_authors: int = 1

    def __post_init__(self):
        if self.window_days <= 0:
            raise ConfigError("window_days must be positive")
        if self.min_shared_authors < 1:
            raise ConfigError("min_shared_authors must be >= 1")


@dataclass(frozen=True)
class Weights:
    date: float = 0.25
    title: float = 0.25
    subjects: float = 0.25
    authors: float = 0.25

    def __post_init__(self):
        w = self.as_array()
        if (w < 0).any():
            raise ConfigError("Weights must be non-negative")
        if not numpy.isclose(w.sum(), 1.0):
            raise ConfigError("Weights must sum to 1, got %g" % w.sum())

    def as_array(self):
        return numpy.array([self.date, self.title, self.subjects, self.authors], dtype=float)


@dataclass(frozen=True)
class FeatureVector:
    date_delta_days: int = None
    title_similarity: float = 0.0
    subject_overlap: float = 0.0
    author_overlap: float = 0.0

    def __post_init__(self):
        if self.date_delta_days is not None and self.date_delta_days < 0:
            raise ConfigError("date_delta_days must be non-negative")
        for name in ('title_similarity', 'subject_overlap', 'author_overlap'):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError("%s out of [0,1]: %r" % (name, getattr(self, name)))

    @property
    def date_proximity(self):
        if self.date_delta_days is None:
            return 0.0
        return max(0.0, 1.0 - self.date_delta_days / 365.0)

    def as_array(self):
        return numpy.array([self.date_proximity, self.title_similarity,
                            self.subject_overlap, self.author_overlap], dtype=float)


@dataclass(frozen=True)
class ScoreInterval:
    mean: float
    std: float
    multiplier: float = 2.0

    def __post_init__(self):
        if self.std < 0 or self.multiplier < 0:
            raise ConfigError("std and multiplier must be non-negative")

    @property
    def low(self):
        return self.mean - self.multiplier * self.std

    @property
    def high(self):
        return self.mean + self.multiplier * self.std

    def __contains__(self, value):
        return self.low <= value <= self.high

    def to_dict(self):
        return {'mean': self.mean, 'std': self.std, 'multiplier': self.multiplier,
                'low': self.low, 'high': self.high}


class RetrofitReport(object):
    def __init__(self):
        self.counts = Counter()
    def to_dict(self):
        return dict(sorted(self.counts.items()))
    def __repr__(self):
        return "<RetrofitReport %s>" % self.to_dict()


#########################  Candidates  #############################


def supplemented_keys(relations, index):
    """(publication id, supplement id) of every pair already tied by IsSupplementedBy."""
    keys = set()
    for r in relations:
        if r.semantics.label == IS_SUPPLEMENTED_BY:
            pd = orient(r, index)
            if pd is not None:
                keys.add((pd[0].id, pd[1].id))
    return keys


def citation_candidates(products, relations, report=None):
    """Canonical (publication, supplement) tuples of the Cites/References
    relations, either direction, that no IsSupplementedBy relation covers yet.
    Sorted by ids, without repeats."""
    index = products if isinstance(products, dict) else index_products(products)
    report = report if report is not None else RetrofitReport()
    relations = list(relations)
    supplemented = supplemented_keys(relations, index)
    found = {}
    for r in relations:
        if r.semantics.label not in CITATION_SEMANTICS:
            continue
        pd = orient(r, index)
        if pd is None:
            continue
        key = (pd[0].id, pd[1].id)
        if key in supplemented:
            report.counts['already_supplemented'] += 1
            continue
        found[key] = pd
    report.counts['candidates'] = len(found)
    return [found[k] for k in sorted(found)]


def _inferred(publication, supplement, rule):
    return Relation(publication.id, supplement.id, Semantics(IS_SUPPLEMENTED_BY), INFERRED, rule)


##########################  Rule-based  ############################


def date_delta(a, b):
    if a.date is None or b.date is None:
        return None
    return abs((a.date - b.date).days)

def satisfies_rule(publication, supplement, cfg=None, match_cfg=None):
    cfg = cfg or RetrofitRuleConfig()
    delta = date_delta(publication, supplement)
    if delta is None or delta > cfg.window_days:
        return False
    alignment = match_author_sets(publication.authors, supplement.authors, match_cfg)
    return len(alignment.matches) >= cfg.min_shared_authors


def retrofit_by_rule(products, relations, cfg=None, match_cfg=None, report=None):
    """Inferred IsSupplementedBy relations for the citation pairs whose dates are
    within cfg.window_days and whose bylines share cfg.min_shared_authors authors."""
    cfg = cfg or RetrofitRuleConfig()
    report = report if report is not None else RetrofitReport()
    inferred = []
    for p, d in citation_candidates(products, relations, report):
        if p.date is None or d.date is None:
            report.counts['missing_date'] += 1
            continue
        if satisfies_rule(p, d, cfg, match_cfg):
            inferred.append(_inferred(p, d, RULE_DATE_AUTHOR))
    report.counts['inferred'] = len(inferred)
    logger.info("Rule retrofit: %r", report)
    return inferred


#######################  Feature vectors  ##########################


def jaccard(a, b):
    """|a & b| / |a | b|; 0 for two empty sets."""
    a = set(a); b = set(b)
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / float(len(union))

def feature_vector(publication, supplement, match_cfg=None):
    alignment = match_author_sets(publication.authors, supplement.authors, match_cfg)
    longest = max(len(publication.authors), len(supplement.authors))
    return FeatureVector(
        date_delta_days=date_delta(publication, supplement),
        title_similarity=jaccard(normalize_title(publication.title).split(),
                                 normalize_title(supplement.title).split()),
        subject_overlap=jaccard(set(s.casefold() for s in publication.subjects),
                                set(s.casefold() for s in supplement.subjects)),
        author_overlap=len(alignment.matches) / float(longest) if longest else 0.0)

def score(fv, weights=None):
    """Weighted mean of the four similarity components, in [0,1].
    A missing date contributes 0 but keeps its weight."""
    weights = weights or Weights()
    s = float(numpy.dot(weights.as_array(), fv.as_array()))
    return min(1.0, max(0.0, s))


##########################  Interval  ##############################


def interval_from_scores(scores, multiplier=2.0):
    scores = numpy.asarray(list(scores), dtype=float)
    if len(scores) < 2:
        raise ValueError("At least two scores are needed to calibrate, got %d" % len(scores))
    return ScoreInterval(float(scores.mean()), float(scores.std(ddof=1)), multiplier)

def calibrate_interval(known_pairs, weights=None, match_cfg=None, multiplier=2.0):
    """Mean +/- multiplier * sample std of the scores of the asserted pairs in *known_pairs*."""
    asserted = [p for p in known_pairs if p.provenance == ASSERTED]
    if len(asserted) < 2:
        raise ValueError("Calibration needs at least two asserted pairs, got %d" % len(asserted))
    scores = [score(feature_vector(p.publication, p.supplement, match_cfg), weights) for p in asserted]
    interval = interval_from_scores(scores, multiplier)
    logger.info("Calibrated on %d pairs: [%.4f, %.4f]", len(scores), interval.low, interval.high)
    return interval


def infer_supplement(candidates, interval, weights=None, match_cfg=None, exclude=()):
    """Inferred IsSupplementedBy relations for the (publication, supplement)
    *candidates* whose score lies in *interval*. Pairs whose id key is in
    *exclude* are never emitted."""
    exclude = set(exclude)
    inferred = []
    seen = set()
    for p, d in candidates:
        key = (p.id, d.id)
        if key in exclude or key in seen:
            continue
        seen.add(key)
        if score(feature_vector(p, d, match_cfg), weights) in interval:
            inferred.append(_inferred(p, d, RULE_INTERVAL))
    logger.info("Interval retrofit: %d of %d candidates inferred", len(inferred), len(seen))
    return inferred


def retrofit_by_interval(products, relations, known_pairs, weights=None, match_cfg=None,
                         multiplier=2.0, report=None):
    index = index_products(products)
    relations = list(relations)
    report = report if report is not None else RetrofitReport()
    interval = calibrate_interval(known_pairs, weights, match_cfg, multiplier)
    candidates = citation_candidates(index, relations, report)
    inferred = infer_supplement(candidates, interval, weights, match_cfg,
                                exclude=supplemented_keys(relations, index))
    report.counts['inferred'] = len(inferred)
    return inferred, interval


def write_relations(relations, path):
    with open(path, 'w', encoding='utf-8') as f:
        for r in relations:
            f.write(json.dumps(r.to_dict(), sort_keys=True) + '\n')
