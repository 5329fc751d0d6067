"""EvalReport model: paired raw/registered comparison rows."""

from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field


class EvalRow(BaseModel):
    """
    One table row of the evaluation report.

    ``*_raw`` columns use the subject's own pRF coordinates, ``*_reg``
    columns the coordinates produced by the row's registration.
    """

    model_config = ConfigDict(frozen=True)

    method_label: str = Field(..., description="Registration method (structural, drrm)")
    hemisphere: str = Field("", description="Hemisphere label (L, R or empty)")
    prf_tool: str = Field("", description="Tool that produced the raw pRF parameters")
    d_v: float = Field(..., ge=0, description="Mean visual coordinate change, degrees")
    f_flip: int = Field(..., ge=0, description="Flipped triangles of the registration")
    rmse_raw: float
    rmse_reg: float
    pc_raw: float
    pc_reg: float
    aic_raw: float
    aic_reg: float
    n_vertices: int = Field(..., ge=0, description="Size of the paired vertex set")

    @property
    def observers_label(self) -> str:
        return f"Average ({self.hemisphere})" if self.hemisphere else "Average"


class VertexDetail(BaseModel):
    """Per-vertex values behind one report row."""

    model_config = ConfigDict(frozen=True)

    method_label: str
    vertex: int
    dv: float
    rmse_raw: float
    rmse_reg: float
    pc_raw: float
    pc_reg: float
    aic_raw: float
    aic_reg: float
    rss_raw: float
    rss_reg: float


class EvalReport(BaseModel):
    """Evaluation report with table rows and an optional vertex-level table."""

    rows: List[EvalRow] = Field(default_factory=list)
    detail: List[VertexDetail] = Field(default_factory=list)
    included_vertices: Optional[List[int]] = Field(None, description="Paired vertex set")

    def row(self, method_label: str) -> EvalRow:
        for row in self.rows:
            if row.method_label == method_label:
                return row
        raise KeyError(method_label)
