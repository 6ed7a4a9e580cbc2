"""
Domain types shared by every stage: research products, their authors,
typed relations, publication/supplement pairs and the per-pair annotation.

All values are frozen once built; constructors check their invariants and
raise ModelError. Each type knows how to turn itself into a plain dict
(JSON-ready) and back.
"""

import datetime
import re
from dataclasses import dataclass, field


class SuppAuthorsError(Exception):
    """Root of the package's exceptions."""

class ModelError(SuppAuthorsError, ValueError):
    """A domain value would break one of its invariants."""

class ConfigError(SuppAuthorsError):
    """A configuration file or value is invalid."""


##########################  Constants  #############################


PUBLICATION = 'publication'
DATASET = 'dataset'      # umbrella kind: proper datasets, figures, tables
SOFTWARE = 'software'
PRODUCT_KINDS = (PUBLICATION, DATASET, SOFTWARE)
SUPPLEMENT_KINDS = (DATASET, SOFTWARE)

IS_SUPPLEMENTED_BY = 'IsSupplementedBy'
CITES = 'Cites'
REFERENCES = 'References'
KNOWN_SEMANTICS = (IS_SUPPLEMENTED_BY, CITES, REFERENCES)

ASSERTED = 'asserted'
INFERRED = 'inferred'
PROVENANCES = (ASSERTED, INFERRED)

MATCH_ORCID = 'orcid'
MATCH_EXACT = 'exact'
MATCH_FUZZY = 'fuzzy'
MATCH_METHODS = (MATCH_ORCID, MATCH_EXACT, MATCH_FUZZY)

GROUP_ATTRIBUTION = 'group_attribution'
NULL_INTERSECTION = 'null_intersection'
OTHER_EXCEPTION = 'other'
EXCEPTION_CLASSES = (GROUP_ATTRIBUTION, NULL_INTERSECTION, OTHER_EXCEPTION)

ADJACENT_ONLY = 'adjacent_only'
NON_ADJACENT = 'involves_non_adjacent'


#########################  Small helpers  ##########################


_ORCID_RE = re.compile(r'(\d{4}-?\d{4}-?\d{4}-?\d{3}[\dX])$', re.IGNORECASE)

def normalize_orcid(text):
    """Bare upper-case ORCID iD from *text*, which may carry a resolver prefix.
    Return None for blank input; unrecognized forms are kept stripped and upper-cased."""
    if text is None:
        return None
    text = str(text).strip()
    if not text:
        return None
    m = _ORCID_RE.search(text)
    if m is None:
        return text.upper()
    digits = m.group(1).replace('-', '').upper()
    return '-'.join(digits[i:i+4] for i in range(0, 16, 4))

def parse_date(text):
    """Day-precision date from 'YYYY', 'YYYY-MM', 'YYYY-MM-DD' or an ISO-8601 timestamp.
    A bare year becomes July 1, a year-month the 15th. None/blank gives None."""
    if text is None:
        return None
    if isinstance(text, datetime.date):
        return text
    text = str(text).strip()
    if not text:
        return None
    try:
        if re.fullmatch(r'\d{4}', text):
            return datetime.date(int(text), 7, 1)
        if re.fullmatch(r'\d{4}-\d{2}', text):
            year, month = text.split('-')
            return datetime.date(int(year), int(month), 15)
        return datetime.date.fromisoformat(text[:10])
    except ValueError:
        raise ModelError("Invalid date: %r" % text)


############################  Authors  #############################


@dataclass(frozen=True)
class AuthorMention:
    position: int
    full_name: str
    orcid: str = None

    def __post_init__(self):
        if isinstance(self.position, bool) or not isinstance(self.position, int):
            raise ModelError("Author position must be an integer: %r" % (self.position,))
        if self.position < 1:
            raise ModelError("Author position must be >= 1, got %d" % self.position)
        if not isinstance(self.full_name, str) or not self.full_name.strip():
            raise ModelError("Author name must be non-empty")
        object.__setattr__(self, 'orcid', normalize_orcid(self.orcid))

    def to_dict(self):
        return {'position': self.position, 'full_name': self.full_name, 'orcid': self.orcid}

    @classmethod
    def from_dict(cls, d):
        return cls(position=d['position'], full_name=d['full_name'], orcid=d.get('orcid'))


@dataclass(frozen=True)
class AuthorList:
    """Byline of one product, kept in ascending position order."""
    mentions: tuple = ()

    def __post_init__(self):
        mentions = tuple(sorted(self.mentions, key=lambda m: m.position))
        positions = [m.position for m in mentions]
        if len(set(positions)) != len(positions):
            raise ModelError("Duplicate author positions: %s" % positions)
        object.__setattr__(self, 'mentions', mentions)

    def __iter__(self):
        return iter(self.mentions)

    def __len__(self):
        return len(self.mentions)

    def __getitem__(self, i):
        return self.mentions[i]

    @classmethod
    def from_pairs(cls, pairs):
        """Build from (position, full_name[, orcid]) tuples, e.g. AuthorList.from_pairs([(1,'a'),(2,'b')])."""
        return cls(tuple(AuthorMention(*p) for p in pairs))

    def to_dict(self):
        return [m.to_dict() for m in self.mentions]

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(AuthorMention.from_dict(x) for x in d))


############################  Products  ############################


@dataclass(frozen=True)
class ResearchProduct:
    id: str
    kind: str
    title: str = ''
    authors: AuthorList = field(default_factory=AuthorList)
    date: datetime.date = None
    subjects: frozenset = frozenset()

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise ModelError("Product id must be a non-empty string")
        if self.kind not in PRODUCT_KINDS:
            raise ModelError("Unknown product kind: %r" % (self.kind,))
        if not isinstance(self.authors, AuthorList):
            object.__setattr__(self, 'authors', AuthorList(tuple(self.authors)))
        object.__setattr__(self, 'title', self.title or '')
        object.__setattr__(self, 'date', parse_date(self.date))
        object.__setattr__(self, 'subjects', frozenset(self.subjects or ()))

    def to_dict(self):
        return {
            'id': self.id,
            'kind': self.kind,
            'title': self.title,
            'authors': self.authors.to_dict(),
            'date': self.date.isoformat() if self.date else None,
            'subjects': sorted(self.subjects),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(id=d['id'], kind=d['kind'], title=d.get('title', ''),
                   authors=AuthorList.from_dict(d.get('authors', [])),
                   date=d.get('date'), subjects=frozenset(d.get('subjects', ())))


###########################  Relations  ############################


@dataclass(frozen=True)
class Semantics:
    """Relation type. Labels outside KNOWN_SEMANTICS are the catch-all 'Other', kept verbatim."""
    label: str

    def __post_init__(self):
        if not isinstance(self.label, str) or not self.label:
            raise ModelError("Relation label must be a non-empty string")

    @property
    def is_other(self):
        return self.label not in KNOWN_SEMANTICS

    @property
    def name(self):
        return 'Other' if self.is_other else self.label

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class Relation:
    source_id: str
    target_id: str
    semantics: Semantics
    provenance: str = ASSERTED
    rule: str = None   # which retrofit produced an inferred relation

    def __post_init__(self):
        if not isinstance(self.semantics, Semantics):
            object.__setattr__(self, 'semantics', Semantics(self.semantics))
        if self.provenance not in PROVENANCES:
            raise ModelError("Unknown provenance: %r" % (self.provenance,))
        if not self.source_id or not self.target_id:
            raise ModelError("Relation endpoints must be non-empty")

    def to_dict(self):
        d = {'source': self.source_id, 'target': self.target_id,
             'reltype': self.semantics.label, 'provenance': self.provenance}
        if self.rule is not None:
            d['rule'] = self.rule
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(source_id=d['source'], target_id=d['target'], semantics=Semantics(d['reltype']),
                   provenance=d.get('provenance', ASSERTED), rule=d.get('rule'))


@dataclass(frozen=True)
class SupplementPair:
    publication: ResearchProduct
    supplement: ResearchProduct
    provenance: str = ASSERTED

    def __post_init__(self):
        if self.publication.kind != PUBLICATION:
            raise ModelError("%s is a %s, not a publication" % (self.publication.id, self.publication.kind))
        if self.supplement.kind not in SUPPLEMENT_KINDS:
            raise ModelError("%s is a %s, not a dataset or software" % (self.supplement.id, self.supplement.kind))
        if self.provenance not in PROVENANCES:
            raise ModelError("Unknown provenance: %r" % (self.provenance,))

    @property
    def key(self):
        return (self.publication.id, self.supplement.id)

    @property
    def kind(self):
        return self.supplement.kind

    def to_dict(self):
        return {'publication': self.publication.to_dict(),
                'supplement': self.supplement.to_dict(),
                'provenance': self.provenance}

    @classmethod
    def from_dict(cls, d):
        return cls(ResearchProduct.from_dict(d['publication']),
                   ResearchProduct.from_dict(d['supplement']),
                   d.get('provenance', ASSERTED))


#######################  Author alignment  #########################


@dataclass(frozen=True)
class MatchedAuthor:
    p_mention: AuthorMention
    d_mention: AuthorMention
    method: str
    score: float = 1.0

    def __post_init__(self):
        if self.method not in MATCH_METHODS:
            raise ModelError("Unknown match method: %r" % (self.method,))
        if not 0.0 <= self.score <= 1.0:
            raise ModelError("Match score out of [0,1]: %r" % (self.score,))
        if self.method != MATCH_FUZZY and self.score != 1.0:
            raise ModelError("%s matches always score 1.0" % self.method)

    def to_dict(self):
        return {'p': self.p_mention.to_dict(), 'd': self.d_mention.to_dict(),
                'method': self.method, 'score': self.score}

    @classmethod
    def from_dict(cls, d):
        return cls(AuthorMention.from_dict(d['p']), AuthorMention.from_dict(d['d']),
                   d['method'], d['score'])


@dataclass(frozen=True)
class AuthorAlignment:
    """One-to-one matching of a publication byline (p side) with a supplement byline (d side)."""
    matches: tuple = ()
    additions: frozenset = frozenset()   # in d only
    removals: frozenset = frozenset()    # in p only

    def __post_init__(self):
        matches = tuple(sorted(self.matches, key=lambda m: m.p_mention.position))
        object.__setattr__(self, 'matches', matches)
        object.__setattr__(self, 'additions', frozenset(self.additions))
        object.__setattr__(self, 'removals', frozenset(self.removals))
        ps = [m.p_mention for m in matches]
        ds = [m.d_mention for m in matches]
        if len(set(ps)) != len(ps) or len(set(ds)) != len(ds):
            raise ModelError("An author appears in more than one match")
        if set(ps) & self.removals or set(ds) & self.additions:
            raise ModelError("A matched author is also listed as added or removed")

    @property
    def p_mentions(self):
        return sorted([m.p_mention for m in self.matches] + list(self.removals), key=lambda m: m.position)

    @property
    def d_mentions(self):
        return sorted([m.d_mention for m in self.matches] + list(self.additions), key=lambda m: m.position)

    def to_dict(self):
        key = lambda m: m.position
        return {'matches': [m.to_dict() for m in self.matches],
                'additions': [m.to_dict() for m in sorted(self.additions, key=key)],
                'removals': [m.to_dict() for m in sorted(self.removals, key=key)]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(MatchedAuthor.from_dict(x) for x in d['matches']),
                   frozenset(AuthorMention.from_dict(x) for x in d['additions']),
                   frozenset(AuthorMention.from_dict(x) for x in d['removals']))


########################  Annotation  ##############################


@dataclass(frozen=True)
class VariationAnnotation:
    addition: bool = False
    removal: bool = False
    shuffle: bool = False
    exception: str = None
    reason: str = None               # free text for the 'other' exception class
    shuffle_adjacency: str = None
    matched: int = 0
    methods: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, 'methods', frozenset(self.methods))
        if self.exception is not None:
            if self.exception not in EXCEPTION_CLASSES:
                raise ModelError("Unknown exception class: %r" % (self.exception,))
            if self.addition or self.removal or self.shuffle:
                raise ModelError("Excepted pairs carry no event flags")
        if self.shuffle and self.matched < 2:
            raise ModelError("A shuffle needs at least two matched authors")
        if self.shuffle != (self.shuffle_adjacency is not None):
            raise ModelError("Shuffle adjacency is set iff the pair is shuffled")
        if self.shuffle_adjacency not in (None, ADJACENT_ONLY, NON_ADJACENT):
            raise ModelError("Unknown adjacency class: %r" % (self.shuffle_adjacency,))

    @property
    def varied(self):
        return self.addition or self.removal or self.shuffle

    @property
    def combo(self):
        """'A', 'R+S', ... or '' when nothing varied."""
        return '+'.join(c for c, flag in zip('ARS', (self.addition, self.removal, self.shuffle)) if flag)

    @property
    def exception_label(self):
        if self.exception == OTHER_EXCEPTION and self.reason:
            return '%s(%s)' % (self.exception, self.reason)
        return self.exception or ''

    def to_dict(self):
        return {'addition': self.addition, 'removal': self.removal, 'shuffle': self.shuffle,
                'exception': self.exception, 'reason': self.reason,
                'shuffle_adjacency': self.shuffle_adjacency, 'matched': self.matched,
                'methods': sorted(self.methods)}

    @classmethod
    def from_dict(cls, d):
        return cls(addition=d['addition'], removal=d['removal'], shuffle=d['shuffle'],
                   exception=d.get('exception'), reason=d.get('reason'),
                   shuffle_adjacency=d.get('shuffle_adjacency'),
                   matched=d.get('matched', 0), methods=frozenset(d.get('methods', ())))
