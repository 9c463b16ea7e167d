"""
Moteur de règles ABP (Adblock Plus) - sous-ensemble documenté

Grammaire acceptée :
  [@@] [|| | |] motif [|] [$options]
  motif   : littéraux, joker `*`, séparateur `^`, ancre de fin `|`
  options : script, image, subdocument, stylesheet, xmlhttprequest/xhr, other
            (font, media, object, ping, websocket → other), ~type,
            third-party, ~third-party, first-party, domain=a|~b, match-case

Tout le reste (règles cosmétiques, regex /…/, options inconnues comme
$csp ou $redirect) lève UnsupportedSyntax et doit être compté par l'appelant.
"""

import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from src.errors import UnsupportedSyntax
from src.filtering.domains import host_matches, is_third_party

logger = logging.getLogger(__name__)


class RuleKind(str, Enum):
    BLOCK = "block"
    EXCEPTION = "exception"


class Anchor(str, Enum):
    HOSTNAME = "hostname"
    START = "start"
    NONE = "none"


class ResourceType(str, Enum):
    SCRIPT = "script"
    IMAGE = "image"
    SUBDOCUMENT = "subdocument"
    STYLESHEET = "stylesheet"
    XHR = "xhr"
    OTHER = "other"


class Party(str, Enum):
    ANY = "any"
    FIRST_PARTY_ONLY = "first_party_only"
    THIRD_PARTY_ONLY = "third_party_only"


class TokenKind(str, Enum):
    LITERAL = "literal"
    WILDCARD = "wildcard"
    SEPARATOR = "separator"
    END_ANCHOR = "end_anchor"


class Outcome(str, Enum):
    BLOCKED = "blocked"
    ALLOWED = "allowed"
    EXCEPTION_ALLOWED = "exception_allowed"


TYPE_OPTIONS = {
    'script': ResourceType.SCRIPT,
    'image': ResourceType.IMAGE,
    'subdocument': ResourceType.SUBDOCUMENT,
    'stylesheet': ResourceType.STYLESHEET,
    'xmlhttprequest': ResourceType.XHR,
    'xhr': ResourceType.XHR,
    'other': ResourceType.OTHER,
    'font': ResourceType.OTHER,
    'media': ResourceType.OTHER,
    'object': ResourceType.OTHER,
    'ping': ResourceType.OTHER,
    'websocket': ResourceType.OTHER,
}

COSMETIC_MARKERS = ('##', '#@#', '#?#', '#$#', '#%#', '$$')

# Même forme que BFILTER_OPTIONS_REGEXP de python-abp
OPTIONS_REGEXP = re.compile(
    r'\$(~?[\w\-]+(?:=[^,\s]+)?(?:,~?[\w\-]+(?:=[^,\s]+)?)*)$'
)
# Valeur avec espace ou apostrophe ($csp=script-src 'self') : les options
# commencent quand même au premier "$nom"
LOOSE_OPTIONS_REGEXP = re.compile(r'\$(~?[\w\-]+(?:[=,].*)?)$')

HOSTNAME_ANCHOR_REGEX = r'^[a-z][a-z0-9+.\-]*://(?:[^/?#]*\.)?'
SEPARATOR_REGEX = r'(?:[^A-Za-z0-9_\-.%]|$)'


@dataclass(frozen=True)
class PatternToken:
    kind: TokenKind
    text: str = ""


@dataclass(frozen=True)
class FilterRule:
    raw: str
    kind: RuleKind
    anchor: Anchor
    pattern: tuple
    resource_types: frozenset = frozenset()
    party: Party = Party.ANY
    include_domains: tuple = ()
    exclude_domains: tuple = ()
    match_case: bool = False
    regex: re.Pattern = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class RequestContext:
    url: str
    resource_type: ResourceType
    frame_origin: str


@dataclass(frozen=True)
class BlockDecision:
    outcome: Outcome
    matched_rule: Optional[int] = None

    @property
    def is_blocked(self):
        return self.outcome is Outcome.BLOCKED


@dataclass
class ParsedFilterList:
    rules: list
    unsupported: Counter = field(default_factory=Counter)
    skipped_lines: int = 0


def is_cosmetic(line):
    return any(marker in line for marker in COSMETIC_MARKERS)


def _tokenize(text):
    tokens = []
    literal = []

    def flush():
        if literal:
            tokens.append(PatternToken(TokenKind.LITERAL, ''.join(literal)))
            literal.clear()

    for pos, char in enumerate(text):
        if char == '*':
            flush()
            tokens.append(PatternToken(TokenKind.WILDCARD))
        elif char == '^':
            flush()
            tokens.append(PatternToken(TokenKind.SEPARATOR))
        elif char == '|' and pos == len(text) - 1:
            flush()
            tokens.append(PatternToken(TokenKind.END_ANCHOR))
        else:
            literal.append(char)
    flush()
    return tuple(tokens)


def _compile(anchor, tokens, match_case):
    parts = []
    if anchor is Anchor.HOSTNAME:
        parts.append(HOSTNAME_ANCHOR_REGEX)
    elif anchor is Anchor.START:
        parts.append('^')
    for token in tokens:
        if token.kind is TokenKind.LITERAL:
            parts.append(re.escape(token.text))
        elif token.kind is TokenKind.WILDCARD:
            parts.append('.*')
        elif token.kind is TokenKind.SEPARATOR:
            parts.append(SEPARATOR_REGEX)
        else:
            parts.append('$')
    return re.compile(''.join(parts), 0 if match_case else re.IGNORECASE)


def _parse_options(raw, options):
    # Inspiré de _parse_filter_options (python-abp)
    positive, negative = set(), set()
    party = Party.ANY
    include, exclude = [], []
    match_case = False

    for option in options.split(','):
        name, _, value = option.partition('=')
        negated = name.startswith('~')
        bare = name[1:] if negated else name
        if bare in TYPE_OPTIONS and not value:
            (negative if negated else positive).add(TYPE_OPTIONS[bare])
        elif bare == 'third-party' and not value:
            party = Party.FIRST_PARTY_ONLY if negated else Party.THIRD_PARTY_ONLY
        elif bare == 'first-party' and not value:
            party = Party.THIRD_PARTY_ONLY if negated else Party.FIRST_PARTY_ONLY
        elif bare == 'domain' and value and not negated:
            for entry in value.split('|'):
                if entry.startswith('~'):
                    exclude.append(entry[1:].lower())
                elif entry:
                    include.append(entry.lower())
        elif bare == 'match-case' and not negated and not value:
            match_case = True
        else:
            raise UnsupportedSyntax(f'Unknown option "{name}"', raw, reason=f'option:{bare}')

    if positive:
        types = positive - negative
    elif negative:
        types = set(ResourceType) - negative
    else:
        types = set()
    if (positive or negative) and not types:
        raise UnsupportedSyntax('Type options exclude every request', raw, reason='empty_types')
    return frozenset(types), party, tuple(include), tuple(exclude), match_case


def parse_rule(line):
    """
    Parse une règle réseau ABP.

    Returns:
        FilterRule dont `raw` est la ligne d'origine
    Raises:
        UnsupportedSyntax: commentaire, ligne vide, règle cosmétique,
        regex, option inconnue ou motif vide (attribut `reason`)
    """
    content = line.strip()
    if not content:
        raise UnsupportedSyntax('Blank line', line, reason='blank')
    if content.startswith('!') or (content.startswith('[') and content.endswith(']')):
        raise UnsupportedSyntax('Comment or header', line, reason='comment')
    if is_cosmetic(content):
        raise UnsupportedSyntax('Cosmetic filter', line, reason='cosmetic')

    kind = RuleKind.BLOCK
    body = content
    if body.startswith('@@'):
        kind = RuleKind.EXCEPTION
        body = body[2:]

    opt_match = None
    if '$' in body:
        opt_match = OPTIONS_REGEXP.search(body) or LOOSE_OPTIONS_REGEXP.search(body)
    if opt_match:
        types, party, include, exclude, match_case = _parse_options(line, opt_match.group(1))
        body = body[:opt_match.start(0)]
    else:
        types, party, include, exclude, match_case = frozenset(), Party.ANY, (), (), False

    if len(body) > 1 and body.startswith('/') and body.endswith('/'):
        raise UnsupportedSyntax('Regular expression filter', line, reason='regex')

    if body.startswith('||'):
        anchor = Anchor.HOSTNAME
        body = body[2:]
    elif body.startswith('|'):
        anchor = Anchor.START
        body = body[1:]
    else:
        anchor = Anchor.NONE

    tokens = _tokenize(body)
    if not tokens:
        raise UnsupportedSyntax('Empty pattern', line, reason='empty_pattern')

    return FilterRule(
        raw=line,
        kind=kind,
        anchor=anchor,
        pattern=tokens,
        resource_types=types,
        party=party,
        include_domains=include,
        exclude_domains=exclude,
        match_case=match_case,
        regex=_compile(anchor, tokens, match_case),
    )


def parse_filter_list(lines):
    """
    Parse une liste complète ; les lignes rejetées sont comptées par motif.
    """
    parsed = ParsedFilterList(rules=[])
    for line in lines:
        line = line.rstrip('\r\n')
        try:
            parsed.rules.append(parse_rule(line))
        except UnsupportedSyntax as e:
            if e.reason in ('blank', 'comment'):
                parsed.skipped_lines += 1
            else:
                parsed.unsupported[e.reason] += 1

    if parsed.unsupported:
        logger.info("%d règles acceptées, %d rejetées (%s)",
                    len(parsed.rules), sum(parsed.unsupported.values()),
                    dict(parsed.unsupported))
    return parsed


def match_rule(rule, ctx):
    if rule.resource_types and ctx.resource_type not in rule.resource_types:
        return False
    origin = ctx.frame_origin.lower()
    if any(host_matches(origin, d) for d in rule.exclude_domains):
        return False
    if rule.include_domains and not any(host_matches(origin, d) for d in rule.include_domains):
        return False
    if not rule.regex.search(ctx.url):
        return False
    if rule.party is Party.ANY:
        return True
    third = is_third_party(ctx.url, origin)
    return third if rule.party is Party.THIRD_PARTY_ONLY else not third


def decide(rules, ctx):
    """Une exception l'emporte toujours ; sinon première règle de blocage."""
    first_block = None
    for index, rule in enumerate(rules):
        if rule.kind is RuleKind.EXCEPTION:
            if match_rule(rule, ctx):
                return BlockDecision(Outcome.EXCEPTION_ALLOWED, index)
        elif first_block is None and match_rule(rule, ctx):
            first_block = index
    if first_block is not None:
        return BlockDecision(Outcome.BLOCKED, first_block)
    return BlockDecision(Outcome.ALLOWED)


def blocking_delta(pre_rules, post_rules, requests):
    """Indices des requêtes dont la décision bloquée/non bloquée change."""
    return {
        i for i, ctx in enumerate(requests)
        if decide(pre_rules, ctx).is_blocked != decide(post_rules, ctx).is_blocked
    }


def apply_diff(rule_lines, added, removed):
    """Liste post-intervention : retire `removed`, ajoute `added` en fin de liste."""
    removed = set(removed)
    result = [line for line in rule_lines if line not in removed]
    present = set(result)
    for line in added:
        if line not in present:
            result.append(line)
            present.add(line)
    return result
