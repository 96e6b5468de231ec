"""Exception hierarchy shared across the package."""

from __future__ import annotations


class MolEditError(Exception):
    """Base class for all errors raised by moledit."""


class SmilesSyntaxError(MolEditError, ValueError):
    """Malformed SMILES or SMARTS text.

    ``position`` is the 0-based character offset where parsing failed.
    """

    def __init__(self, message: str, text: str = "", position: int | None = None):
        self.text = text
        self.position = position
        if position is not None:
            message = f"{message} at position {position}"
            if text:
                message += f": {text!r}"
        super().__init__(message)


class ValenceError(MolEditError):
    """An atom exceeds every valence allowed for its element."""


class KekulizationError(MolEditError):
    """An aromatic system admits no alternating single/double assignment."""


class MapCollision(MolEditError):
    """Atom numbering requested on a molecule that already carries atom maps."""


class UnsupportedPrimitive(MolEditError):
    """SMARTS primitive outside the supported subset."""


class ActionSyntaxError(MolEditError):
    """Edit action text does not follow the action grammar."""


class ArityMismatch(MolEditError):
    """Original and replacement fragments disagree on attachment points."""


class GroupNotFound(MolEditError):
    """The group named by an edit action is not present in the molecule."""


class AmbiguousSite(MolEditError):
    """Several non-equivalent sites match and nothing disambiguates them."""


class JsonError(MolEditError):
    """Wrapper JSON is not an object or lacks the action list."""


class ReactionParseError(MolEditError):
    """Reaction SMILES could not be split or parsed."""


class UnmappedAtoms(MolEditError):
    """Changed reaction atoms cannot be tied to any mapped core atom."""


class WidthMismatch(MolEditError):
    """Fingerprints of different widths were compared."""


class UnknownOracle(MolEditError, KeyError):
    """No property oracle is registered under the requested name."""


class EmptyInput(MolEditError):
    """An operation that needs at least one record received none."""


class OracleError(MolEditError):
    """An external property oracle failed for one input."""
