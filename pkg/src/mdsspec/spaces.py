"""Compact symmetric spaces: descriptors, geodesic distances and sampling.

Points are flat float arrays. A sphere or projective factor of dimension
``n`` contributes ``n + 1`` coordinates (a unit vector; projective points
are taken modulo sign), a circle contributes one arc-length coordinate in
``[0, L)``. Product points concatenate the factor blocks in order.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from math import pi, sqrt

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * pi
_UNIT_TOL = 1e-12


class Space:
    """Base class of all space descriptors."""

    def atoms(self):
        """Irreducible factors: spheres, projective spaces and single circles."""
        return (self,)

    @property
    def coord_size(self):
        return sum(a.coord_size for a in self.atoms())

    def coord_slices(self):
        out, start = [], 0
        for a in self.atoms():
            out.append(slice(start, start + a.coord_size))
            start += a.coord_size
        return out

    def __str__(self):
        return format_space(self)


@dataclass(frozen=True, eq=True)
class Sphere(Space):
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"sphere dimension must be >= 1, got {self.n!r}")

    @property
    def dim(self):
        return self.n

    @property
    def diameter(self):
        return pi

    @property
    def coord_size(self):
        return self.n + 1


@dataclass(frozen=True, eq=True)
class Projective(Space):
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"projective dimension must be >= 1, got {self.n!r}")

    @property
    def dim(self):
        return self.n

    @property
    def diameter(self):
        return pi / 2

    @property
    def coord_size(self):
        return self.n + 1


@dataclass(frozen=True, eq=True)
class Torus(Space):
    """Flat torus: a product of circles with the given circumferences."""

    lengths: tuple = (TWO_PI,)

    def __post_init__(self):
        lengths = tuple(float(x) for x in self.lengths)
        if not lengths or any(not x > 0 for x in lengths):
            raise DomainError(f"torus needs positive circumferences, got {self.lengths!r}")
        object.__setattr__(self, "lengths", lengths)

    @property
    def dim(self):
        return len(self.lengths)

    @property
    def diameter(self):
        return sqrt(sum((x / 2) ** 2 for x in self.lengths))

    @property
    def coord_size(self):
        return len(self.lengths)

    def atoms(self):
        if len(self.lengths) == 1:
            return (self,)
        return tuple(Torus((x,)) for x in self.lengths)

    @property
    def is_circle(self):
        return len(self.lengths) == 1


def circle(length=TWO_PI):
    return Torus((length,))


@dataclass(frozen=True, eq=True)
class Product(Space):
    factors: tuple = field(default_factory=tuple)

    def __init__(self, *factors):
        if len(factors) == 1 and isinstance(factors[0], (list, tuple)):
            factors = tuple(factors[0])
        flat = []
        for f in factors:
            if not isinstance(f, Space):
                raise DomainError(f"not a space: {f!r}")
            flat.extend(f.factors if isinstance(f, Product) else (f,))
        if len(flat) < 2:
            raise DomainError("a product needs at least two factors")
        object.__setattr__(self, "factors", tuple(flat))

    @property
    def dim(self):
        return sum(f.dim for f in self.factors)

    @property
    def diameter(self):
        return sqrt(sum(f.diameter**2 for f in self.factors))

    def atoms(self):
        return tuple(a for f in self.factors for a in f.atoms())


# -- distances ---------------------------------------------------------------


def _atom_sq_distance(atom, x, y):
    if isinstance(atom, Sphere):
        return np.arccos(np.clip(np.sum(x * y, axis=-1), -1.0, 1.0)) ** 2
    if isinstance(atom, Projective):
        return np.arccos(np.clip(np.abs(np.sum(x * y, axis=-1)), 0.0, 1.0)) ** 2
    length = atom.lengths[0]
    delta = np.abs(x[..., 0] - y[..., 0]) % length
    return np.minimum(delta, length - delta) ** 2


def _as_points(s, x):
    arr = np.asarray(x, dtype=float)
    if arr.shape[-1:] != (s.coord_size,):
        raise DomainError(
            f"point has {arr.shape[-1:] or 'no'} coordinates, {format_space(s)} needs {s.coord_size}"
        )
    return arr


def factor_sq_distances(s, x, y):
    """Squared distances in each atomic factor, as a list of arrays."""
    x = _as_points(s, x)
    y = _as_points(s, y)
    return [_atom_sq_distance(a, x[..., sl], y[..., sl]) for a, sl in zip(s.atoms(), s.coord_slices())]


def geodesic_distance(s, x, y):
    """Geodesic distance in radians; broadcasts over leading axes."""
    d2 = sum(factor_sq_distances(s, x, y))
    d = np.sqrt(d2)
    return float(d) if np.ndim(d) == 0 else d


def factor_cosines(s, x, y):
    """Per-atom cosine arguments of the zonal series.

    ``x . y`` for spheres, ``|x . y|`` for projective spaces and
    ``cos(2 pi delta / L)`` for a circle of circumference ``L``.
    """
    x = _as_points(s, x)
    y = _as_points(s, y)
    out = []
    for a, sl in zip(s.atoms(), s.coord_slices()):
        xa, ya = x[..., sl], y[..., sl]
        if isinstance(a, Sphere):
            out.append(np.clip(np.sum(xa * ya, axis=-1), -1.0, 1.0))
        elif isinstance(a, Projective):
            out.append(np.clip(np.abs(np.sum(xa * ya, axis=-1)), 0.0, 1.0))
        else:
            out.append(np.cos(TWO_PI * (xa[..., 0] - ya[..., 0]) / a.lengths[0]))
    return out


def _atom_pairwise_sq(atom, X):
    if isinstance(atom, (Sphere, Projective)):
        G = X @ X.T
        if isinstance(atom, Projective):
            G = np.abs(G)
        D = np.arccos(np.clip(G, -1.0, 1.0)) ** 2
    else:
        length = atom.lengths[0]
        delta = np.abs(X[:, 0][:, None] - X[:, 0][None, :]) % length
        D = np.minimum(delta, length - delta) ** 2
    return D


def pairwise_squared_distances(s, X):
    """Exactly symmetric, zero-diagonal matrix of squared geodesic distances."""
    X = _as_points(s, X)
    if X.ndim != 2:
        raise DomainError("expected an (N, coords) point array")
    D = np.zeros((len(X), len(X)))
    for a, sl in zip(s.atoms(), s.coord_slices()):
        D += _atom_pairwise_sq(a, X[:, sl])
    upper = np.triu(D, 1)
    return upper + upper.T


def canonicalize(s, X, tol=_UNIT_TOL):
    """Flip projective blocks so their first nonzero coordinate is positive."""
    X = np.array(_as_points(s, X), dtype=float)
    flat = X.reshape(-1, X.shape[-1])
    for a, sl in zip(s.atoms(), s.coord_slices()):
        if not isinstance(a, Projective):
            continue
        block = flat[:, sl]
        nonzero = np.abs(block) > tol
        first = np.argmax(nonzero, axis=1)
        lead = block[np.arange(len(block)), first]
        block[lead < 0] *= -1.0
        flat[:, sl] = block
    return flat.reshape(X.shape)


def points_equal(s, x, y, tol=_UNIT_TOL):
    """Coordinate-wise equality; projective blocks compare up to sign."""
    x = _as_points(s, x)
    y = _as_points(s, y)
    for a, sl in zip(s.atoms(), s.coord_slices()):
        xa, ya = x[..., sl], y[..., sl]
        if isinstance(a, Sphere):
            gap = np.max(np.abs(xa - ya))
        elif isinstance(a, Projective):
            gap = min(np.max(np.abs(xa - ya)), np.max(np.abs(xa + ya)))
        else:
            delta = abs(xa[..., 0] - ya[..., 0]) % a.lengths[0]
            gap = np.max(np.minimum(delta, a.lengths[0] - delta))
        if gap > tol:
            return False
    return True


def validate_points(s, X, tol=_UNIT_TOL):
    X = _as_points(s, X)
    for a, sl in zip(s.atoms(), s.coord_slices()):
        block = X[..., sl]
        if isinstance(a, (Sphere, Projective)):
            if np.any(np.abs(np.linalg.norm(block, axis=-1) - 1.0) > tol):
                raise DomainError(f"non-unit vector in {format_space(a)} factor")
        elif np.any((block < 0) | (block >= a.lengths[0])):
            raise DomainError("circle coordinate outside [0, L)")
    return X


# -- samples -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SampleSet:
    space: Space
    points: np.ndarray
    seed: int | None = None
    scheme: str = "uniform"

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"x{i}" for i in range(self.space.coord_size)])
        for row in self.points:
            w.writerow([format(v, ".17g") for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, space, seed=None, scheme="uniform"):
        rows = list(csv.reader(io.StringIO(text)))
        pts = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
        return cls(space, pts.reshape(-1, space.coord_size), seed, scheme)

    def to_json(self):
        return json.dumps(
            {
                "space": format_space(self.space),
                "seed": self.seed,
                "scheme": self.scheme,
                "n_points": len(self),
                "points": [[float(v) for v in row] for row in self.points],
            }
        )

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        space = parse_space(obj["space"])
        pts = np.array(obj["points"], dtype=float).reshape(-1, space.coord_size)
        return cls(space, pts, obj.get("seed"), obj.get("scheme", "uniform"))


def sample_uniform(s, count, seed):
    """I.i.d. points from the normalized volume measure of ``s``.

    ``seed`` is an integer or a :class:`numpy.random.SeedSequence`; each
    atomic factor draws from its own spawned substream.
    """
    if int(count) != count or count < 2:
        raise DomainError(f"need at least 2 points, got {count!r}")
    count = int(count)
    atoms = s.atoms()
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    streams = root.spawn(len(atoms))
    blocks = []
    for a, ss in zip(atoms, streams):
        rng = np.random.default_rng(ss)
        if isinstance(a, (Sphere, Projective)):
            g = rng.standard_normal((count, a.n + 1))
            blocks.append(g / np.linalg.norm(g, axis=1, keepdims=True))
        else:
            blocks.append(rng.uniform(0.0, a.lengths[0], size=(count, 1)))
    pts = canonicalize(s, np.hstack(blocks))
    return SampleSet(s, pts, seed=seed, scheme="uniform")


def grid_points(s, count):
    """Equally spaced grid with ``count`` points per circle factor."""
    atoms = s.atoms()
    if not all(isinstance(a, Torus) for a in atoms):
        raise DomainError(f"no canonical grid on {format_space(s)}; use sample_uniform")
    if int(count) != count or count < 2:
        raise DomainError(f"need at least 2 grid points per factor, got {count!r}")
    axes = [a.lengths[0] * np.arange(int(count)) / count for a in atoms]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    return SampleSet(s, pts, seed=None, scheme="grid")


# -- descriptor grammar ------------------------------------------------------

_TOKEN = re.compile(r"^(RP|S|T)(\d+)$|^T\[([^\]]*)\]$")


def _format_atomless(f):
    if isinstance(f, Sphere):
        return f"S{f.n}"
    if isinstance(f, Projective):
        return f"RP{f.n}"
    if isinstance(f, Torus):
        if all(x == TWO_PI for x in f.lengths):
            return f"T{len(f.lengths)}"
        return "T[" + ",".join(repr(x) for x in f.lengths) + "]"
    raise DomainError(f"cannot format {f!r}")


def format_space(s):
    """Inverse of :func:`parse_space`."""
    if isinstance(s, Product):
        return " x ".join(_format_atomless(f) for f in s.factors)
    return _format_atomless(s)


def parse_space(text):
    """Parse ``"S2 x RP3 x T1"``-style descriptors (whitespace-insensitive).

    ``T<m>`` is the m-torus with circumference ``2 pi`` per circle and
    ``T[L1,L2,...]`` a torus with explicit circumferences.
    """
    if not isinstance(text, str) or not text.strip():
        raise DomainError("empty space descriptor")
    compact = re.sub(r"\s+", "", text)
    parts = re.split(r"(?<=[\d\]])x(?=[RST])", compact)
    factors = []
    for part in parts:
        m = _TOKEN.match(part)
        if not m:
            raise DomainError(f"bad space token {part!r} in {text!r}")
        kind, num, lengths = m.groups()
        if lengths is not None:
            try:
                vals = tuple(float(v) for v in lengths.split(","))
            except ValueError as exc:
                raise DomainError(f"bad torus circumferences in {part!r}") from exc
            factors.append(Torus(vals))
            continue
        num = int(num)
        if kind == "S":
            factors.append(Sphere(num))
        elif kind == "RP":
            factors.append(Projective(num))
        else:
            if num < 1:
                raise DomainError("torus dimension must be >= 1")
            factors.append(Torus((TWO_PI,) * num))
    return factors[0] if len(factors) == 1 else Product(*factors)
