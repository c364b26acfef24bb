import re
from enum import Enum
from pydantic import BaseModel, ConfigDict, model_validator
from rdflib import BNode, URIRef

ABSOLUTE_IRI = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:[^\s<>\"{}|^`\\]*$")

# ECHAR escapes, so every literal stays on one line
_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}


class TermKind(str, Enum):
    IRI = "iri"
    BLANK = "blank"
    LITERAL = "literal"


class Term(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: str
    kind: TermKind = TermKind.IRI
    language: str | None = None
    datatype: str | None = None

    @model_validator(mode="after")
    def check_kind(self) -> "Term":
        if self.kind == TermKind.IRI and not ABSOLUTE_IRI.match(self.value):
            raise ValueError(f"'{self.value}' is not an absolute IRI")
        if self.kind == TermKind.BLANK and not self.value:
            raise ValueError("Blank node label must not be empty")
        if self.kind != TermKind.LITERAL and (self.language or self.datatype):
            raise ValueError("Only literals carry a language tag or datatype")
        if self.language and self.datatype:
            raise ValueError("A literal has either a language tag or a datatype")
        return self

    @classmethod
    def iri(cls, value: str) -> "Term":
        return cls(value=value)

    @classmethod
    def blank(cls, label: str) -> "Term":
        return cls(value=label, kind=TermKind.BLANK)

    @classmethod
    def literal(
        cls, value: str, language: str | None = None, datatype: str | None = None
    ) -> "Term":
        return cls(
            value=value, kind=TermKind.LITERAL, language=language, datatype=datatype
        )

    @property
    def is_literal(self) -> bool:
        return self.kind == TermKind.LITERAL

    @property
    def key(self) -> str:
        """Catalog name: the IRI itself, ``_:label`` for blank nodes, N-Triples text for literals."""
        if self.kind == TermKind.IRI:
            return self.value
        return self.n3()

    def n3(self) -> str:
        if self.kind == TermKind.IRI:
            return URIRef(self.value).n3()
        if self.kind == TermKind.BLANK:
            return BNode(self.value).n3()
        escaped = "".join(_ESCAPES.get(ch, ch) for ch in self.value)
        if self.language:
            return f'"{escaped}"@{self.language}'
        if self.datatype:
            return f'"{escaped}"^^<{self.datatype}>'
        return f'"{escaped}"'


class Triple(BaseModel):
    model_config = ConfigDict(frozen=True)

    subject: Term
    predicate: Term
    object: Term

    @model_validator(mode="after")
    def check_positions(self) -> "Triple":
        if self.subject.is_literal:
            raise ValueError("Subject must be an IRI or blank node")
        if self.predicate.kind != TermKind.IRI:
            raise ValueError("Predicate must be an IRI")
        return self

    @classmethod
    def of(cls, subject: str, predicate: str, obj: str) -> "Triple":
        """Shorthand for an all-IRI triple."""
        return cls(subject=Term.iri(subject), predicate=Term.iri(predicate), object=Term.iri(obj))

    def n3(self) -> str:
        return f"{self.subject.n3()} {self.predicate.n3()} {self.object.n3()} ."

    def contains(self, entity_key: str) -> bool:
        return self.subject.key == entity_key or self.object.key == entity_key


class MoleculeSet(BaseModel):
    model_config = ConfigDict(frozen=True)

    entity: str
    # None when the set came from a remote endpoint rather than a local catalog
    entity_id: int | None = None
    molecules: tuple[Triple, ...] = ()
    truncated: bool = False

    @model_validator(mode="after")
    def check_membership(self) -> "MoleculeSet":
        for triple in self.molecules:
            if not triple.contains(self.entity):
                raise ValueError(
                    f"Molecule {triple.n3()} does not contain {self.entity}"
                )
        return self

    def __len__(self) -> int:
        return len(self.molecules)

    @property
    def is_empty(self) -> bool:
        return not self.molecules
