"""
Exceptions du pipeline.

Toutes dérivent de BreakageError : la CLI les traduit en code de sortie 2
(entrée invalide), le reste en code 1.
"""


class BreakageError(Exception):
    """Erreur de base, porte éventuellement le texte fautif."""

    def __init__(self, error, text=None):
        message = error if text is None else f'{error} in "{text}"'
        super().__init__(message)
        self.error = error
        self.text = text


class UnsupportedSyntax(BreakageError):
    """Ligne de liste de filtres hors de la grammaire acceptée."""

    def __init__(self, error, text, reason="unsupported"):
        super().__init__(error, text)
        self.reason = reason


class MalformedRecord(BreakageError):
    """Ligne JSONL invalide dans un journal de commits."""

    def __init__(self, error, line_no):
        super().__init__(f"line {line_no}: {error}")
        self.line_no = line_no


class ConfigError(BreakageError):
    pass


class SchemaError(BreakageError):
    pass


class XmlError(BreakageError):
    pass


class DanglingEdge(SchemaError):
    pass


class AllFeaturesDropped(BreakageError):
    pass


class SchemaMismatch(BreakageError):
    pass


class DegenerateLabels(BreakageError):
    pass


class SingleClass(BreakageError):
    pass


class TooFewSamples(BreakageError):
    pass


class UnknownTarget(BreakageError):
    pass
