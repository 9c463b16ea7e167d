"""
Domaines enregistrables et détection tiers/premier parti.

La table des suffixes publics est l'instantané embarqué dans tldextract
(aucun téléchargement) : le résultat ne dépend que de la version installée.
"""

from functools import lru_cache
from urllib.parse import urlsplit

import tldextract

_EXTRACT = tldextract.TLDExtract(suffix_list_urls=(), cache_dir=None)


@lru_cache(maxsize=65536)
def registrable_domain(host):
    """Retourne eTLD+1 pour un hostname, ou le hostname lui-même (IP, suffixe nu)."""
    host = host.strip(".").lower()
    ext = _EXTRACT(host)
    if ext.domain and ext.suffix:
        return f"{ext.domain}.{ext.suffix}"
    return host


def url_host(url):
    return (urlsplit(url).hostname or "").lower()


def is_third_party(url, frame_origin):
    return registrable_domain(url_host(url)) != registrable_domain(frame_origin)


def host_matches(host, domain):
    """Vrai si host == domain ou en est un sous-domaine."""
    host = host.lower()
    domain = domain.lower()
    return host == domain or host.endswith("." + domain)
