"""CaseDirectory and manifest models."""

from pathlib import Path
from typing import Dict, Optional

from pydantic import BaseModel, Field

from ..lib.config import (
    BOLD_FILE,
    BOLD_NOISELESS_FILE,
    DEFORMATION_FILE,
    MANIFEST_FILE,
    MESH_FILE,
    PRF_FILE,
    STIMULUS_FILE,
    UV_FILE,
)


class CaseManifest(BaseModel):
    """
    Contents of ``manifest.json``.

    Fields:
        files: File name -> SHA-256 digest for every present file
        hemisphere: Hemisphere label (L, R) when known
        prf_tool: Tool that produced the pRF parameters
        angle_transform: Declared conversion applied to polar angles at ingestion
        seed: Seed used to generate the case, for synthetic cases
        role: "subject" or "template"
    """

    files: Dict[str, str] = Field(default_factory=dict)
    hemisphere: Optional[str] = Field(None)
    prf_tool: str = Field("synthetic")
    angle_transform: str = Field("identity")
    seed: Optional[int] = Field(None)
    role: str = Field("subject")

    def to_dict(self) -> dict:
        return self.model_dump(mode="json")


class CaseDirectory(BaseModel):
    """Conventional file paths of a case directory."""

    root: Path

    @property
    def manifest(self) -> Path:
        return self.root / MANIFEST_FILE

    @property
    def mesh(self) -> Path:
        return self.root / MESH_FILE

    @property
    def uv(self) -> Path:
        return self.root / UV_FILE

    @property
    def prf(self) -> Path:
        return self.root / PRF_FILE

    @property
    def stimulus(self) -> Path:
        return self.root / STIMULUS_FILE

    @property
    def bold(self) -> Path:
        return self.root / BOLD_FILE

    @property
    def bold_noiseless(self) -> Path:
        return self.root / BOLD_NOISELESS_FILE

    @property
    def deformation(self) -> Path:
        return self.root / DEFORMATION_FILE
