"""Built-in manifold models and the JSON model-catalogue schema.

Normalization convention: every model uses a basis in which the
coordinates of 2*pi*c1 are rational, and intersection numbers are stored
in units that make them rational too.  Where that differs from the common
Fubini-Study normalization the dictionary is recorded in the model notes.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Union

from . import (
    ClassVector,
    ConeSpec,
    IntersectionTensor,
    ManifoldModel,
    PolyFunctional,
    SubvarietyEntry,
)

SCHEMA_VERSION = 1


def _frac(x) -> Fraction:
    return Fraction(x)


def _linear(coeffs: dict[int, Fraction], dim: int) -> PolyFunctional:
    monos = {}
    for i, c in coeffs.items():
        expo = tuple(1 if j == i else 0 for j in range(dim))
        monos[expo] = _frac(c)
    return PolyFunctional(monos)


def pairing_functional(tensor: IntersectionTensor, w: ClassVector) -> PolyFunctional:
    """Linear functional a -> tensor(a, w, ..., w) for surface models (n=2)."""
    if tensor.n != 2:
        raise ValueError("pairing functional helper is for n=2 tensors")
    coeffs = {}
    for i in range(tensor.dim):
        c = sum(
            (tensor.value((i, j)) * w.coords[j] for j in range(tensor.dim)),
            Fraction(0),
        )
        if c:
            coeffs[i] = c
    return _linear(coeffs, tensor.dim)


def volume_functional(tensor: IntersectionTensor) -> PolyFunctional:
    """The degree-n form a -> a^n as an explicit polynomial."""
    import math

    monos: dict[tuple[int, ...], Fraction] = {}
    for idx, val in tensor.entries.items():
        counts = [0] * tensor.dim
        for i in idx:
            counts[i] += 1
        mult = math.factorial(tensor.n)
        for c in counts:
            mult //= math.factorial(c)
        expo = tuple(counts)
        monos[expo] = monos.get(expo, Fraction(0)) + val * mult
    return PolyFunctional({e: c for e, c in monos.items() if c})


def riemann_surface(genus: int) -> ManifoldModel:
    """Compact Riemann surface; the single basis class is the area class.

    The area class is normalized to total area 1, so volumes of
    lambda * (basis) read lambda.  Curvature conventions: the round sphere
    metric has Ricci form twice itself, the flat torus zero, hyperbolic
    minus twice itself, so 2*pi*c1 has coordinate 2, 0, resp. -2.
    """
    if genus < 0:
        raise ValueError("genus must be nonnegative")
    if genus == 0:
        name, c1, kod, basis = "cp1", 2, None, "fs"
    elif genus == 1:
        name, c1, kod, basis = "torus1", 0, 0, "flat"
    else:
        name, c1, kod, basis = f"genus{genus}", -2, 1, "hyp"
    tensor = IntersectionTensor(n=1, dim=1, entries={(0,): Fraction(1)})
    return ManifoldModel(
        name=name,
        n=1,
        basis=(basis,),
        tensor=tensor,
        c1twopi=ClassVector.of([c1]),
        cone=ConeSpec(((basis, _linear({0: Fraction(1)}, 1)),)),
        catalogue=(),
        kodaira=kod,
        notes=f"genus {genus} curve; area class normalized to unit total area",
    )


def torus(n: int) -> ManifoldModel:
    """Complex n-torus, presented on the ray spanned by a flat Kahler class.

    The full (1,1) cohomology is n^2-dimensional; this model tracks only
    the flow-invariant ray through the chosen flat metric (c1 = 0 so the
    flow never moves the class).
    """
    if n < 1:
        raise ValueError("complex dimension must be positive")
    tensor = IntersectionTensor(n=n, dim=1, entries={(0,) * n: Fraction(1)})
    return ManifoldModel(
        name=f"torus{n}",
        n=n,
        basis=("flat",),
        tensor=tensor,
        c1twopi=ClassVector.of([0]),
        cone=ConeSpec((("flat", _linear({0: Fraction(1)}, 1)),)),
        catalogue=(),
        kodaira=0,
        notes="flat-class ray of a complex n-torus; volume normalized to lambda^n",
    )


def product_p1_p1() -> ManifoldModel:
    """P1 x P1 with basis the two ruling classes a, b.

    Intersections stored in units with a.b = 1 (i.e. both rulings
    normalized to unit area), a^2 = b^2 = 0; a class is Kahler iff both
    coordinates are positive.  2*pi*c1 = 2(a + b).
    """
    tensor = IntersectionTensor(
        n=2, dim=2, entries={(0, 1): Fraction(1)}
    )
    catalogue = (
        # horizontal ruling P1 x {pt}: pairs with the first coordinate
        SubvarietyEntry("H", 1, {(0,): Fraction(1)}),
        # vertical ruling {pt} x P1: pairs with the second coordinate
        SubvarietyEntry("F", 1, {(1,): Fraction(1)}),
    )
    cone = ConeSpec(
        (
            ("a", _linear({0: Fraction(1)}, 2)),
            ("b", _linear({1: Fraction(1)}, 2)),
        )
    )
    return ManifoldModel(
        name="p1xp1",
        n=2,
        basis=("a", "b"),
        tensor=tensor,
        c1twopi=ClassVector.of([2, 2]),
        cone=cone,
        catalogue=catalogue,
        kodaira=None,
        notes="ruling classes with unit pairing; volume of (m1, m2) is 2*m1*m2",
    )


def blowup_p2() -> ManifoldModel:
    """P2 blown up at a point, in the 2*pi-scaled basis (h, e).

    h is the pullback of the hyperplane class scaled so h^2 = 1 and e is
    the class of the exceptional curve E with e^2 = -1, h.e = 0; then
    2*pi*c1 = 3h - e has rational coordinates.  Coordinate dictionary: in
    the normalization where the hyperplane class integrates to 2*pi over a
    line, a class l1*H + l2*E has coordinates (m1, m2) = (l1, l2)/(2*pi)
    here, the flow time parameter is unchanged, and volumes here are
    1/(2*pi)^2 times volumes there.

    The Kahler cone is the Nakai-Moishezon region: positive volume and
    positive pairing with both h and e, which reduces to 0 < -m2 < m1.
    """
    tensor = IntersectionTensor(
        n=2,
        dim=2,
        entries={(0, 0): Fraction(1), (1, 1): Fraction(-1)},
    )
    cone = ConeSpec(
        (
            ("volume", volume_functional(tensor)),  # m1^2 - m2^2 > 0
            ("H", _linear({0: Fraction(1)}, 2)),  # pairing with h: m1 > 0
            ("E", _linear({1: Fraction(-1)}, 2)),  # pairing with e: -m2 > 0
        )
    )
    catalogue = (
        # exceptional curve: integral of m1*h + m2*e is -m2
        SubvarietyEntry("E", 1, {(1,): Fraction(-1)}),
        # line avoiding the blown-up point: integral is m1
        SubvarietyEntry("H", 1, {(0,): Fraction(1)}),
    )
    return ManifoldModel(
        name="blowup-p2",
        n=2,
        basis=("h", "e"),
        tensor=tensor,
        c1twopi=ClassVector.of([3, -1]),
        cone=cone,
        catalogue=catalogue,
        kodaira=None,
        notes="2*pi-scaled basis; Kahler region 0 < -m2 < m1",
    )


def product_ec() -> ManifoldModel:
    """Product of an elliptic curve E and a genus-2 curve C.

    Basis (e, c): the two factor area classes with unit pairing e.c = 1.
    The hyperbolic factor carries Ricci form minus twice itself, so
    2*pi*c1 = -2c; the flow expands the base factor forever while the
    fiber class is frozen.
    """
    tensor = IntersectionTensor(n=2, dim=2, entries={(0, 1): Fraction(1)})
    cone = ConeSpec(
        (
            ("e", _linear({0: Fraction(1)}, 2)),
            ("c", _linear({1: Fraction(1)}, 2)),
        )
    )
    catalogue = (
        # elliptic fiber E x {pt}: pairs with the fiber coordinate
        SubvarietyEntry("E-fiber", 1, {(0,): Fraction(1)}),
        # base section {pt} x C: pairs with the base coordinate
        SubvarietyEntry("C-section", 1, {(1,): Fraction(1)}),
    )
    return ManifoldModel(
        name="product-ec",
        n=2,
        basis=("e", "c"),
        tensor=tensor,
        c1twopi=ClassVector.of([0, -2]),
        cone=cone,
        catalogue=catalogue,
        kodaira=1,
        notes="elliptic x genus-2 product; intermediate kodaira dimension 1",
    )


def builtin_models() -> dict[str, ManifoldModel]:
    """The six catalogued models, keyed by CLI name."""
    models = [
        riemann_surface(0),
        riemann_surface(1),
        riemann_surface(2),
        product_p1_p1(),
        blowup_p2(),
        product_ec(),
    ]
    return {m.name: m for m in models}


def get_model(name: str) -> ManifoldModel:
    models = builtin_models()
    if name not in models:
        raise KeyError(
            f"unknown model {name!r}; built-ins: {', '.join(sorted(models))}"
        )
    return models[name]


# ---------------------------------------------------------------------------
# serialization (schema 1)
# ---------------------------------------------------------------------------


def _rat_str(x: Fraction) -> str:
    return str(x)


def model_to_dict(model: ManifoldModel) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "name": model.name,
        "n": model.n,
        "basis": list(model.basis),
        "tensor": {
            ",".join(map(str, idx)): _rat_str(v) for idx, v in model.tensor.entries.items()
        },
        "c1twopi": [_rat_str(c) for c in model.c1twopi],
        "cone": [
            {
                "label": label,
                "monomials": {
                    ",".join(map(str, expo)): _rat_str(c)
                    for expo, c in f.monomials.items()
                },
            }
            for label, f in model.cone.constraints
        ],
        "catalogue": [
            {
                "label": entry.label,
                "dim": entry.dim,
                "pairing": {
                    ",".join(map(str, idx)): _rat_str(v)
                    for idx, v in entry.pairing.items()
                },
            }
            for entry in model.catalogue
        ],
        "kodaira": "minus-infinity" if model.kodaira is None else model.kodaira,
        "notes": model.notes,
    }


def model_from_dict(data: dict) -> ManifoldModel:
    if data.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"unsupported model schema: {data.get('schema')!r}")
    n = int(data["n"])
    basis = tuple(data["basis"])
    tensor = IntersectionTensor(
        n=n,
        dim=len(basis),
        entries={
            tuple(int(i) for i in key.split(",")): Fraction(val)
            for key, val in data["tensor"].items()
        },
    )
    cone = ConeSpec(
        tuple(
            (
                item["label"],
                PolyFunctional(
                    {
                        tuple(int(i) for i in key.split(",")): Fraction(val)
                        for key, val in item["monomials"].items()
                    }
                ),
            )
            for item in data["cone"]
        )
    )
    catalogue = tuple(
        SubvarietyEntry(
            label=item["label"],
            dim=int(item["dim"]),
            pairing={
                tuple(int(i) for i in key.split(",")): Fraction(val)
                for key, val in item["pairing"].items()
            },
        )
        for item in data["catalogue"]
    )
    kod = data["kodaira"]
    return ManifoldModel(
        name=data["name"],
        n=n,
        basis=basis,
        tensor=tensor,
        c1twopi=ClassVector.of(data["c1twopi"]),
        cone=cone,
        catalogue=catalogue,
        kodaira=None if kod == "minus-infinity" else int(kod),
        notes=data.get("notes", ""),
    )


def dump_catalogue(path: Union[str, Path], models: dict[str, ManifoldModel] | None = None) -> None:
    models = models if models is not None else builtin_models()
    payload = {
        "schema": SCHEMA_VERSION,
        "models": [model_to_dict(m) for m in models.values()],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_catalogue(path: Union[str, Path]) -> dict[str, ManifoldModel]:
    payload = json.loads(Path(path).read_text())
    if payload.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"unsupported catalogue schema: {payload.get('schema')!r}")
    models = [model_from_dict(item) for item in payload["models"]]
    return {m.name: m for m in models}
