"""
Streaming readers for product and relation dumps (newline-delimited JSON),
the configurable field mapping, and author-name/title normalization.
"""

import io
import json
import logging
import os
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field, fields, replace

from unidecode import unidecode

from suppauthors.model import (SuppAuthorsError, ModelError, ConfigError, AuthorMention, AuthorList,
                               ResearchProduct, Relation, Semantics, PUBLICATION, DATASET,
                               SOFTWARE, PRODUCT_KINDS, ASSERTED, parse_date)

logger = logging.getLogger(__name__)


class IngestError(SuppAuthorsError):
    """One input record could not be turned into a domain value."""
    def __init__(self, error_class, message):
        SuppAuthorsError.__init__(self, message)
        self.error_class = error_class


########################  Name normalization  ######################


_PUNCT = re.compile(r'[^\w\s.\-]', re.UNICODE)
_SPACES = re.compile(r'\s+')

def _fold(raw):
    """Compatibility decomposition, diacritics stripped, casefolded."""
    text = unicodedata.normalize('NFKD', raw)
    text = ''.join(c for c in text if not unicodedata.combining(c))
    text = unidecode(text)  # what decomposition leaves behind: ø, ł, ß, ...
    return text.casefold()

def _clean(text):
    text = text.replace(',', ' ').replace('_', ' ')
    text = _PUNCT.sub('', text)
    return _SPACES.sub(' ', text).strip()

def normalize_name(raw):
    """Canonical form of an author name: 'Müller, J.' -> 'j. muller'.
    A single comma is read as 'Last, First' and reordered. Idempotent."""
    if raw is None or not raw.strip():
        raise ValueError("Cannot normalize an empty name")
    text = _fold(raw)
    if text.count(',') == 1:
        last, first = text.split(',')
        text = '%s %s' % (first, last)
    text = _clean(text)
    if not text:
        raise ValueError("Name %r is only punctuation" % raw)
    return text

def normalize_title(raw):
    """Same pipeline as normalize_name without the comma reorder. Empty titles give ''."""
    if not raw:
        return ''
    return _clean(_fold(raw))


##########################  Mapping config  ########################


DEFAULT_KIND_LABELS = {
    'publication': PUBLICATION, 'article': PUBLICATION, 'literature': PUBLICATION,
    'dataset': DATASET, 'data': DATASET, 'figure': DATASET, 'table': DATASET,
    'software': SOFTWARE,
}

@dataclass(frozen=True)
class MappingConfig:
    """Where each model field lives in a dump record. Paths are dotted ('instance.date')."""
    id: str = 'id'
    kind: str = 'type'
    title: str = 'title'
    authors: str = 'authors'
    author_position: str = 'rank'
    author_name: str = 'fullname'
    author_orcid: str = 'orcid'
    date: str = 'date'
    subjects: str = 'subjects'
    relation_source: str = 'source'
    relation_target: str = 'target'
    relation_type: str = 'reltype'
    kind_labels: dict = field(default_factory=lambda: dict(DEFAULT_KIND_LABELS))
    default_kind: str = None     # None: unknown kind labels are rejected
    strict: bool = False         # abort on the first bad record instead of skipping it

    def __post_init__(self):
        for name in ('id', 'kind', 'authors', 'author_position', 'author_name',
                     'relation_source', 'relation_target', 'relation_type'):
            if not getattr(self, name):
                raise ConfigError("Mapping binding '%s' is required" % name)
        labels = dict((str(k).casefold(), v) for k, v in self.kind_labels.items())
        bad = [v for v in labels.values() if v not in PRODUCT_KINDS]
        if bad:
            raise ConfigError("Kind labels must map to one of %s, got %s" % (PRODUCT_KINDS, bad))
        if self.default_kind is not None and self.default_kind not in PRODUCT_KINDS:
            raise ConfigError("default_kind must be one of %s" % (PRODUCT_KINDS,))
        object.__setattr__(self, 'kind_labels', labels)

    @classmethod
    def from_dict(cls, d):
        known = set(f.name for f in fields(cls))
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError("Unknown mapping keys: %s" % ', '.join(unknown))
        d = dict(d)
        if 'kind_labels' in d:
            labels = dict(DEFAULT_KIND_LABELS)
            labels.update(d['kind_labels'])
            d['kind_labels'] = labels
        return cls(**d)


def read_config_file(path):
    """Parse a JSON or TOML file (by extension) into a dict."""
    if not os.path.exists(path):
        raise ConfigError("Config file not found: %s" % path)
    try:
        if path.endswith('.toml'):
            try:
                import tomllib
            except ImportError:  # Python < 3.11
                import tomli as tomllib
            with open(path, 'rb') as f:
                return tomllib.load(f)
        with open(path, encoding='utf-8') as f:
            return json.load(f)
    except ValueError as e:
        raise ConfigError("Cannot parse %s: %s" % (path, e))

def load_mapping(path, **overrides):
    cfg = MappingConfig.from_dict(read_config_file(path))
    return replace(cfg, **overrides) if overrides else cfg


##########################  Ingest report  #########################


class IngestReport(object):
    def __init__(self, name=''):
        self.name = name
        self.records_read = 0
        self.records_accepted = 0
        self.records_skipped = 0
        self.errors = Counter()

    def accept(self):
        self.records_read += 1
        self.records_accepted += 1

    def skip(self, error_class):
        self.records_read += 1
        self.records_skipped += 1
        self.errors[error_class] += 1

    def to_dict(self):
        return {'records_read': self.records_read, 'records_accepted': self.records_accepted,
                'records_skipped': self.records_skipped, 'errors': dict(sorted(self.errors.items()))}

    def __repr__(self):
        errs = ', '.join('%s=%d' % kv for kv in sorted(self.errors.items()))
        return "<%s: read %d, accepted %d, skipped %d%s>" % (self.name or 'ingest',
            self.records_read, self.records_accepted, self.records_skipped,
            ' (%s)' % errs if errs else '')


##########################  Record parsing  ########################


_MISSING = object()

def get_path(record, path):
    """Follow a dotted *path* into nested dicts. Missing keys give _MISSING."""
    node = record
    for key in path.split('.'):
        if not isinstance(node, dict) or key not in node:
            return _MISSING
        node = node[key]
    return node

def _required(record, path, what):
    value = get_path(record, path)
    if value is _MISSING or value is None or value == '':
        raise IngestError('missing_field', "Missing %s (%s)" % (what, path))
    return value

def _optional(record, path):
    if not path:
        return None
    value = get_path(record, path)
    return None if value is _MISSING else value

def _text(value):
    # Some dumps wrap scalar values as {"value": ...}
    if isinstance(value, dict) and 'value' in value:
        value = value['value']
    return '' if value is None else str(value)

def _rank(value):
    # 3 and "3" are ranks; 1.7, true and "x" are not
    if isinstance(value, bool):
        raise IngestError('invalid_author', "Author rank %r is not an integer" % (value,))
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, int):
        return value
    if isinstance(value, str) and value.strip().lstrip('+-').isdigit():
        return int(value)
    raise IngestError('invalid_author', "Author rank %r is not an integer" % (value,))

def _parse_authors(raw, cfg):
    if not isinstance(raw, list):
        raise IngestError('invalid_author', "Authors field is not a list")
    seen = set()   # (position, name, orcid) hash set: exact repeats collapse
    mentions = []
    for i, a in enumerate(raw):
        if not isinstance(a, dict):
            raise IngestError('invalid_author', "Author entry %d is not an object" % i)
        rank = get_path(a, cfg.author_position)
        if rank is _MISSING or rank is None:
            rank = i + 1   # byline order when the dump has no rank
        name = get_path(a, cfg.author_name)
        if name is _MISSING or not _text(name).strip():
            raise IngestError('invalid_author', "Author entry %d has no name" % i)
        orcid = get_path(a, cfg.author_orcid) if cfg.author_orcid else None
        orcid = None if orcid is _MISSING else _text(orcid) or None
        rank = _rank(rank)
        key = (rank, _text(name).strip(), orcid)
        if key in seen:
            continue
        seen.add(key)
        try:
            mentions.append(AuthorMention(rank, key[1], orcid))
        except ModelError as e:
            raise IngestError('invalid_author', str(e))
    try:
        return AuthorList(tuple(mentions))
    except ModelError as e:
        raise IngestError('duplicate_position', str(e))

def _parse_kind(label, cfg):
    kind = cfg.kind_labels.get(_text(label).strip().casefold(), cfg.default_kind)
    if kind is None:
        raise IngestError('unknown_kind', "Unknown product kind label %r" % (label,))
    return kind

def product_from_record(record, cfg):
    """One ResearchProduct from a decoded JSON object. Raises IngestError."""
    if not isinstance(record, dict):
        raise IngestError('malformed_json', "Record is not a JSON object")
    pid = _text(_required(record, cfg.id, 'id'))
    kind = _parse_kind(_required(record, cfg.kind, 'kind'), cfg)
    title = _optional(record, cfg.title)
    if isinstance(title, list):
        title = title[0] if title else ''
    authors = _optional(record, cfg.authors)
    authors = _parse_authors(authors if authors is not None else [], cfg)
    try:
        date = parse_date(_text(_optional(record, cfg.date)))
    except ModelError as e:
        raise IngestError('invalid_date', str(e))
    subjects = _optional(record, cfg.subjects) or []
    if not isinstance(subjects, list):
        subjects = [subjects]
    try:
        return ResearchProduct(id=pid, kind=kind, title=_text(title), authors=authors, date=date,
                               subjects=frozenset(_text(s).strip() for s in subjects if _text(s).strip()))
    except ModelError as e:
        raise IngestError('malformed_json', str(e))

def relation_from_record(record, cfg):
    if not isinstance(record, dict):
        raise IngestError('malformed_json', "Record is not a JSON object")
    source = _text(_required(record, cfg.relation_source, 'relation source'))
    target = _text(_required(record, cfg.relation_target, 'relation target'))
    label = _text(_required(record, cfg.relation_type, 'relation type')).strip()
    try:
        return Relation(source, target, Semantics(label),
                        provenance=record.get('provenance', ASSERTED), rule=record.get('rule'))
    except ModelError as e:
        raise IngestError('malformed_json', str(e))


###########################  Streaming  ############################


def _lines(stream):
    """Non-blank lines of a byte or text stream, one at a time, still undecoded."""
    for n, line in enumerate(stream, 1):
        if line.strip():
            yield n, line

def _iter_records(stream, cfg, report, build):
    for n, line in _lines(stream):
        try:
            try:
                if isinstance(line, bytes):
                    line = line.decode('utf-8')
                record = json.loads(line)
            except UnicodeDecodeError as e:
                raise IngestError('malformed_json', "Invalid UTF-8: %s" % e)
            except ValueError as e:
                raise IngestError('malformed_json', "Invalid JSON: %s" % e)
            value = build(record, cfg)
        except IngestError as e:
            if cfg.strict:
                raise IngestError(e.error_class, "line %d: %s" % (n, e))
            report.skip(e.error_class)
            logger.debug("Skipped line %d (%s): %s", n, e.error_class, e)
            continue
        report.accept()
        yield value

def iter_products(stream, cfg=None, report=None):
    """Yield ResearchProducts from newline-delimited JSON, holding one record at a time."""
    cfg = cfg or MappingConfig()
    report = report if report is not None else IngestReport('products')
    return _iter_records(stream, cfg, report, product_from_record)

def iter_relations(stream, cfg=None, report=None):
    cfg = cfg or MappingConfig()
    report = report if report is not None else IngestReport('relations')
    return _iter_records(stream, cfg, report, relation_from_record)

def parse_products(stream, cfg=None):
    """Read every product from *stream*. Return (products, IngestReport)."""
    report = IngestReport('products')
    products = list(iter_products(stream, cfg, report))
    logger.info("Products: %r", report)
    return products, report

def parse_relations(stream, cfg=None):
    """Read every relation from *stream*. Return (relations, IngestReport)."""
    report = IngestReport('relations')
    relations = list(iter_relations(stream, cfg, report))
    logger.info("Relations: %r", report)
    return relations, report

def read_products(path, cfg=None):
    with io.open(path, 'rb') as f:
        return parse_products(f, cfg)

def read_relations(path, cfg=None):
    with io.open(path, 'rb') as f:
        return parse_relations(f, cfg)
