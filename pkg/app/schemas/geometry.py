import json
from pathlib import Path
from typing import Annotated, Any, Dict, List, Optional, Type, TypeVar, Union

from pydantic import BaseModel, BeforeValidator, Field, ValidationError, model_validator

from app.core.exceptions import InputError, SymspaceError
from app.geometry.exact_core import MultiPoly, matrix, scalar_to_str, vector
from app.geometry.lambda_conditions import ShapeFamily
from app.geometry.sigma_surface import SurfaceSpec, build_surface, family_from_surface, surface_from_family
from app.geometry.symplectic_model import AffineSympElement, SympSpace


def _normalise_scalar(value: Any) -> str:
    if isinstance(value, float):
        raise ValueError("floats are not exact scalars; write p/q")
    try:
        return scalar_to_str(value)
    except SymspaceError as exc:
        raise ValueError(str(exc)) from exc


Scalar = Annotated[str, BeforeValidator(_normalise_scalar)]
MatrixRows = List[List[Scalar]]

ModelT = TypeVar("ModelT", bound=BaseModel)


class SympSpaceModel(BaseModel):
    """Dimensions and optional non-standard forms of R^{2n} x R^{2p}"""
    n: int = Field(ge=0)
    p: int = Field(ge=0)
    omega0: Optional[MatrixRows] = None
    omegaN0: Optional[MatrixRows] = None

    @model_validator(mode="before")
    @classmethod
    def flatten_space(cls, data: Any) -> Any:
        """Dimensions may sit at top level or under a nested space object"""
        if isinstance(data, dict) and isinstance(data.get("space"), dict):
            merged = {key: value for key, value in data.items() if key != "space"}
            for key, value in data["space"].items():
                merged.setdefault(key, value)
            return merged
        return data

    def to_space(self) -> SympSpace:
        return SympSpace.create(
            self.n,
            self.p,
            matrix(self.omega0) if self.omega0 else None,
            matrix(self.omegaN0) if self.omegaN0 else None,
        )


class ShapeFamilyModel(SympSpaceModel):
    """Shape operators C_1..C_2p with optional structure constants"""
    kind: str = "family"
    C: List[MatrixRows]
    B_struct: Optional[List[List[List[Scalar]]]] = None
    B_ops: Optional[List[MatrixRows]] = None

    def to_family(self) -> ShapeFamily:
        return ShapeFamily.create(
            self.to_space(),
            [matrix(c) for c in self.C],
            B_struct=self.B_struct,
            B_ops=[matrix(b) for b in self.B_ops] if self.B_ops is not None else None,
        )


class GeneratorModel(BaseModel):
    """(A_i, a_i) in the affine symplectic algebra"""
    A: MatrixRows
    a: List[Scalar]


class SurfaceSpecModel(SympSpaceModel):
    """Surface Sigma given by 2p affine symplectic generators"""
    kind: str = "surface"
    generators: List[GeneratorModel]

    def to_surface(self) -> SurfaceSpec:
        space = self.to_space()
        elements = [AffineSympElement.create(space, matrix(g.A), vector(g.a)) for g in self.generators]
        return build_surface(space, elements)


class OrbitPointModel(BaseModel):
    x: List[Scalar]
    t: Scalar


class OrbitRequestModel(BaseModel):
    """Tangent directions and times at which to evaluate the orbit"""
    points: List[OrbitPointModel] = Field(default_factory=list)


class PolyTermModel(BaseModel):
    """One term coeff * z^exps * nu^nu"""
    exps: List[int]
    nu: int = Field(default=0, ge=0)
    coeff: Scalar

    @model_validator(mode="after")
    def check_exponents(self) -> "PolyTermModel":
        if any(e < 0 for e in self.exps):
            raise ValueError("exponents must be non-negative")
        return self


def load_model(model_cls: Type[ModelT], data: Any) -> ModelT:
    """Validate a decoded JSON document, mapping failures to InputError with the field path"""
    try:
        return model_cls.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise InputError(first["msg"], first["loc"]) from exc


def read_document(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a JSON input file; syntax errors carry line and column"""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(exc.msg, (f"line {exc.lineno}", f"column {exc.colno}")) from exc
    if not isinstance(data, dict):
        raise InputError("top level must be a JSON object")
    return data


def is_surface_document(data: Dict[str, Any]) -> bool:
    return data.get("kind") == "surface" or "generators" in data


def family_from_document(data: Dict[str, Any]) -> ShapeFamily:
    """A ShapeFamily from either document kind; surfaces must be in the standard split"""
    if is_surface_document(data):
        return family_from_surface(load_model(SurfaceSpecModel, data).to_surface())
    return load_model(ShapeFamilyModel, data).to_family()


def surface_from_document(data: Dict[str, Any]) -> SurfaceSpec:
    """A SurfaceSpec from either document kind; families go through A_i = diag(C_i, B_i)"""
    if is_surface_document(data):
        return load_model(SurfaceSpecModel, data).to_surface()
    return surface_from_family(load_model(ShapeFamilyModel, data).to_family())


def poly_from_terms(num_vars: int, terms: List[Dict[str, Any]]) -> MultiPoly:
    models = [load_model(PolyTermModel, term) for term in terms]
    return MultiPoly.from_json(num_vars, [model.model_dump() for model in models])
