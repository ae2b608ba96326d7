"""Superhero/movie knowledge base: load, validate, and look up entities.

The bundled KB file is a small curated JSON fixture; the lookup interface is
the only thing the rest of the system depends on, so a different backend can
replace the file without touching callers.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Optional

from .core import DialogError


class ParseError(DialogError):
    """The KB or corpus file is missing or not parseable."""


class ValidationError(DialogError):
    """The KB file parsed but violates a structural constraint."""


class EntityKind(str, Enum):
    SUPERHERO = "Superhero"
    MOVIE = "Movie"


@dataclass(frozen=True)
class Hero:
    id: str
    name: str
    real_name: str
    eye_color: str
    origin: str
    aliases: tuple[str, ...] = ()


@dataclass(frozen=True)
class Movie:
    id: str
    title: str
    year: int
    related_hero_ids: tuple[str, ...] = ()
    is_promoted: bool = False
    detail_snippets: tuple[str, ...] = ()


@dataclass(frozen=True)
class EntityMatch:
    surface: str
    entity_id: str
    kind: EntityKind
    start: int
    end: int


class KnowledgeBase:
    """Read-only store of heroes and movies with surface-form matching."""

    def __init__(self, heroes: dict[str, Hero], movies: dict[str, Movie]):
        self.heroes = heroes
        self.movies = movies
        promoted = [m for m in movies.values() if m.is_promoted]
        if len(promoted) != 1:
            raise ValidationError(
                f"expected exactly one promoted movie, found {len(promoted)}"
            )
        self.promoted_movie = promoted[0]
        for movie in movies.values():
            for hid in movie.related_hero_ids:
                if hid not in heroes:
                    raise ValidationError(
                        f"movie {movie.id!r} references unknown hero {hid!r}"
                    )
        self._surface_pattern = self._build_pattern()

    def _surfaces(self) -> list[tuple[str, str, EntityKind]]:
        out: list[tuple[str, str, EntityKind]] = []
        for hero in self.heroes.values():
            out.append((hero.name, hero.id, EntityKind.SUPERHERO))
            for alias in hero.aliases:
                out.append((alias, hero.id, EntityKind.SUPERHERO))
        for movie in self.movies.values():
            out.append((movie.title, movie.id, EntityKind.MOVIE))
        return out

    def _build_pattern(self) -> re.Pattern:
        # Longest surface first so the regex alternation prefers it; heroes
        # come before movies for equal-length ties.
        surfaces = sorted(
            self._surfaces(),
            key=lambda s: (-len(s[0]), 0 if s[2] is EntityKind.SUPERHERO else 1),
        )
        self._by_surface: dict[str, tuple[str, EntityKind]] = {}
        for s, eid, kind in surfaces:  # first (hero on ties) wins collisions
            self._by_surface.setdefault(s.lower(), (eid, kind))
        alternation = "|".join(re.escape(s) for s, _, _ in surfaces)
        return re.compile(rf"(?<![A-Za-z0-9])({alternation})(?![A-Za-z0-9])", re.IGNORECASE)

    def find_mentions(self, text: str) -> list[EntityMatch]:
        """Scan text for KB surface forms, longest match winning on overlap."""
        matches: list[EntityMatch] = []
        for m in self._surface_pattern.finditer(text):
            surface = m.group(1)
            entity_id, kind = self._by_surface[surface.lower()]
            matches.append(
                EntityMatch(surface=surface, entity_id=entity_id, kind=kind,
                            start=m.start(1), end=m.end(1))
            )
        return matches

    def hero(self, hero_id: str) -> Hero:
        return self.heroes[hero_id]

    def movie(self, movie_id: str) -> Movie:
        return self.movies[movie_id]

    def has(self, entity_id: str) -> bool:
        return entity_id in self.heroes or entity_id in self.movies

    def movies_for_hero(self, hero_id: str) -> list[Movie]:
        return [m for m in self.movies.values() if hero_id in m.related_hero_ids]


def _require(record: dict, key: str, context: str):
    if key not in record:
        raise ValidationError(f"{context} is missing field {key!r}: {record}")
    return record[key]


def load_kb(path: str | Path) -> KnowledgeBase:
    """Load and validate a KB file.

    Raises ParseError for a missing/unreadable/non-JSON file and
    ValidationError for structural problems (naming the offending record).
    """
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read KB file {path}: {exc}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"KB file {path} is not valid JSON: {exc}") from exc

    heroes: dict[str, Hero] = {}
    for rec in data.get("heroes", []):
        hero = Hero(
            id=_require(rec, "id", "hero record"),
            name=_require(rec, "name", "hero record"),
            real_name=_require(rec, "real_name", "hero record"),
            eye_color=_require(rec, "eye_color", "hero record"),
            origin=_require(rec, "origin", "hero record"),
            aliases=tuple(rec.get("aliases", [])),
        )
        heroes[hero.id] = hero
    movies: dict[str, Movie] = {}
    for rec in data.get("movies", []):
        movie = Movie(
            id=_require(rec, "id", "movie record"),
            title=_require(rec, "title", "movie record"),
            year=int(_require(rec, "year", "movie record")),
            related_hero_ids=tuple(rec.get("related_hero_ids", [])),
            is_promoted=bool(rec.get("is_promoted", False)),
            detail_snippets=tuple(rec.get("detail_snippets", [])),
        )
        movies[movie.id] = movie
    return KnowledgeBase(heroes, movies)


def bundled_kb_path() -> Path:
    return Path(resources.files("movietalk").joinpath("data/kb.json"))  # type: ignore[arg-type]


_default_kb: Optional[KnowledgeBase] = None


def default_kb() -> KnowledgeBase:
    """The bundled knowledge base, loaded once per process."""
    global _default_kb
    if _default_kb is None:
        _default_kb = load_kb(bundled_kb_path())
    return _default_kb
