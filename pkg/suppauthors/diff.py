"""
Author-list alignment and authorship variation events.

For a pair (p, d), A_p and A_d are matched one-to-one (ORCID, then
normalized name, then fuzzy name). Unmatched p-authors are removals,
unmatched d-authors are additions, and a shuffle is any inversion in the
relative order of the matched authors. Every event is a binary flag per pair.
"""

import logging
import multiprocessing
import os
from dataclasses import dataclass

from rapidfuzz.distance import Levenshtein

from suppauthors.model import (AuthorAlignment, MatchedAuthor, VariationAnnotation, ConfigError,
                               MATCH_ORCID, MATCH_EXACT, MATCH_FUZZY, GROUP_ATTRIBUTION,
                               NULL_INTERSECTION, OTHER_EXCEPTION, ADJACENT_ONLY, NON_ADJACENT)
from suppauthors.ingest import normalize_name

logger = logging.getLogger(__name__)

DEFAULT_GROUP_PATTERNS = frozenset(['team', 'group', 'consortium', 'collaboration', 'data curation'])
EMPTY_AUTHOR_LIST = 'empty author list'
_EPS = 1e-9


@dataclass(frozen=True)
class MatchConfig:
    fuzzy_enabled: bool = True
    fuzzy_threshold: float = 0.90
    group_patterns: frozenset = DEFAULT_GROUP_PATTERNS

    def __post_init__(self):
        if not 0.0 < self.fuzzy_threshold <= 1.0:
            raise ConfigError("fuzzy_threshold must be in (0,1], got %r" % (self.fuzzy_threshold,))
        object.__setattr__(self, 'group_patterns',
                           frozenset(p.strip().lower() for p in self.group_patterns if p.strip()))


def name_key(mention):
    try:
        return normalize_name(mention.full_name)
    except ValueError:
        return mention.full_name.strip().casefold()

def similarity(a, b):
    """Normalized edit similarity, 1 - distance/max(len)."""
    return Levenshtein.normalized_similarity(a, b)

def _orcid_conflict(p, d):
    return p.orcid is not None and d.orcid is not None and p.orcid != d.orcid


########################  Matching  ################################


def match_author_sets(A_p, A_d, cfg=None):
    """One-to-one AuthorAlignment of two AuthorLists, in three passes:
    ORCID equality, normalized-name equality, then (if enabled) greedy
    best-first fuzzy pairs above cfg.fuzzy_threshold."""
    cfg = cfg or MatchConfig()
    free_p = list(A_p)   # ascending positions
    free_d = list(A_d)
    matches = []

    # 1. ORCID
    for p in list(free_p):
        if p.orcid is None:
            continue
        for d in free_d:
            if d.orcid == p.orcid:
                matches.append(MatchedAuthor(p, d, MATCH_ORCID, 1.0))
                free_p.remove(p)
                free_d.remove(d)
                break

    # 2. Normalized names
    dkeys = dict((d, name_key(d)) for d in free_d)
    for p in list(free_p):
        key = name_key(p)
        for d in free_d:
            if dkeys[d] == key and not _orcid_conflict(p, d):
                matches.append(MatchedAuthor(p, d, MATCH_EXACT, 1.0))
                free_p.remove(p)
                free_d.remove(d)
                break

    # 3. Fuzzy, highest similarity first, ties by p then d position
    if cfg.fuzzy_enabled and free_p and free_d:
        candidates = []
        for p in free_p:
            pkey = name_key(p)
            for d in free_d:
                if _orcid_conflict(p, d):
                    continue
                s = similarity(pkey, dkeys[d])
                if s + _EPS >= cfg.fuzzy_threshold:
                    candidates.append((-s, p.position, d.position, p, d))
        candidates.sort(key=lambda c: c[:3])
        used_p = set(); used_d = set()
        for negs, _, _, p, d in candidates:
            if p in used_p or d in used_d:
                continue
            used_p.add(p); used_d.add(d)
            matches.append(MatchedAuthor(p, d, MATCH_FUZZY, min(1.0, -negs)))
        free_p = [p for p in free_p if p not in used_p]
        free_d = [d for d in free_d if d not in used_d]

    return AuthorAlignment(tuple(matches), frozenset(free_d), frozenset(free_p))


#########################  Events  #################################


def _d_order(alignment):
    """d-positions of the matched authors, listed in p-position order."""
    return [m.d_mention.position for m in alignment.matches]

def _is_shuffled(seq):
    return any(seq[i] > seq[i+1] for i in range(len(seq)-1))

def detect_events(alignment):
    """Binary addition/removal/shuffle flags of an alignment.
    Additions and removals do not by themselves imply a shuffle."""
    seq = _d_order(alignment)
    shuffle = len(seq) > 1 and _is_shuffled(seq)
    return VariationAnnotation(
        addition=bool(alignment.additions),
        removal=bool(alignment.removals),
        shuffle=shuffle,
        shuffle_adjacency=classify_shuffle_adjacency(alignment) if shuffle else None,
        matched=len(alignment.matches),
        methods=frozenset(m.method for m in alignment.matches))


def classify_shuffle_adjacency(alignment):
    """ADJACENT_ONLY if every inverted pair of matched authors is adjacent in
    the p-ordered matched sequence, NON_ADJACENT otherwise."""
    seq = _d_order(alignment)
    if len(seq) < 2 or not _is_shuffled(seq):
        raise ValueError("Alignment has no shuffle")
    # an inversion (i, j) with j - i > 1 exists iff max(seq[:j-1]) > seq[j] for some j
    running_max = seq[0]
    for j in range(2, len(seq)):
        if running_max > seq[j]:
            return NON_ADJACENT
        running_max = max(running_max, seq[j-1])
    return ADJACENT_ONLY


def classify_exception(pair, alignment, cfg=None):
    """(exception class, reason) that keeps *pair* out of event counting,
    or (None, None)."""
    cfg = cfg or MatchConfig()
    A_p = pair.publication.authors
    A_d = pair.supplement.authors
    for d in A_d:
        key = name_key(d)
        if any(pattern in key for pattern in cfg.group_patterns):
            return GROUP_ATTRIBUTION, None
    if len(A_p) == 0 or len(A_d) == 0:
        return OTHER_EXCEPTION, EMPTY_AUTHOR_LIST
    if not alignment.matches:
        return NULL_INTERSECTION, None
    return None, None


def annotate_pair(pair, cfg=None):
    """Return (alignment, VariationAnnotation) for one SupplementPair."""
    cfg = cfg or MatchConfig()
    alignment = match_author_sets(pair.publication.authors, pair.supplement.authors, cfg)
    exception, reason = classify_exception(pair, alignment, cfg)
    if exception is not None:
        return alignment, VariationAnnotation(
            exception=exception, reason=reason, matched=len(alignment.matches),
            methods=frozenset(m.method for m in alignment.matches))
    return alignment, detect_events(alignment)


class _Annotator(object):
    def __init__(self, cfg):
        self.cfg = cfg
    def __call__(self, pair):
        return annotate_pair(pair, self.cfg)[1]

def annotate_pairs(pairs, cfg=None, jobs=None):
    """List of (pair, annotation), in the order of *pairs*.
    *jobs* worker processes (default: all CPUs); 1 runs in-process."""
    cfg = cfg or MatchConfig()
    pairs = list(pairs)
    jobs = jobs or os.cpu_count() or 1
    annotate = _Annotator(cfg)
    if jobs == 1 or len(pairs) < 2:
        annotations = [annotate(p) for p in pairs]
    else:
        chunksize = max(1, len(pairs) // (jobs * 4))
        with multiprocessing.Pool(min(jobs, len(pairs))) as pool:
            annotations = pool.map(annotate, pairs, chunksize)
    logger.debug("Annotated %d pairs with %d job(s)", len(pairs), jobs)
    return list(zip(pairs, annotations))
