"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field


class Overrides(BaseModel):
    """Optional parameter overrides shared by all commands.

    Unknown keys are rejected up front (extra="forbid"), before any
    computation runs.
    """

    model_config = ConfigDict(extra="forbid")

    wavelength: float | None = Field(None, gt=0, description="optical wavelength, m")
    temperature: float | None = Field(None, gt=0, description="base temperature, K")
    dark_rate: float | None = Field(None, ge=0, description="detector dark counts, 1/s")
    seed: int | None = Field(None, ge=0, le=2**64 - 1)
    n_photons: int | None = Field(None, ge=1)
    tau_d: float | None = Field(None, ge=0, description="storage delay, s")
    tau_dec: float | None = Field(None, gt=0, description="coherence time, s")
    bins: int | None = Field(None, ge=1, description="samples per mechanical period")


class DeviceRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    device: str
    device_file: str | None = None
    overrides: Overrides = Field(default_factory=Overrides)


class FeasibilityRequest(DeviceRequest):
    pass


class ArrivalRequest(DeviceRequest):
    pass


class VisibilityRequest(DeviceRequest):
    tau_dec: float | None = Field(
        None, gt=0, description="coherence time, s; falls back to overrides.tau_dec"
    )
    tau_d_grid: list[float] | None = Field(
        None, description="ascending storage delays, s; default spans 5 tau_dec"
    )


class SimulateRequest(DeviceRequest):
    phases: list[float] | None = Field(
        None, description="interferometer phase settings, rad; default 8 even steps"
    )
    workers: int = Field(1, ge=1, le=64)


class DerivedDeviceOut(BaseModel):
    name: str
    omega_m_rad_s: float
    x_zp_m: float
    g_rad_s: float
    kappa: float
    gamma_c_hz: float
    sideband_ratio: float
    t_eid_k: float
    p_success: float
    dark_count_bound_hz: float


class FeasibilityCheckOut(BaseModel):
    name: str
    passed: bool
    margin: float | None  # None when the requirement is unbounded (e.g. no dark counts)
    detail: str


class FeasibilityResponse(BaseModel):
    device: DerivedDeviceOut
    checks: list[FeasibilityCheckOut]
    passed: bool


class TableRowOut(BaseModel):
    name: str
    kappa: float
    kappa_published: float
    kappa_deviation_pct: float
    sideband_ratio: float
    sideband_ratio_published: float
    sideband_ratio_deviation_pct: float
    t_eid_k: float
    t_eid_published_k: float
    t_eid_deviation_pct: float


class TableResponse(BaseModel):
    rows: list[TableRowOut]


class ArrivalResponse(BaseModel):
    device: str
    gamma_c_hz: float
    omega_m_rad_s: float
    t_s: list[float]
    density_per_s: list[float]


class VisibilityRowOut(BaseModel):
    tau_d_s: float
    visibility: float
    relative_rate: float  # delay-line survival factor on the count rate


class VisibilityResponse(BaseModel):
    device: str
    tau_dec_s: float
    rows: list[VisibilityRowOut]


class RecordOut(BaseModel):
    trial_index: int
    arrival_time_s: float
    detector: str
    phase_rad: float
    origin: str


class VisibilityEstimateOut(BaseModel):
    visibility: float
    standard_error: float
    phase_offset: float


class HistogramOut(BaseModel):
    bin_width_s: float
    t0_s: float
    counts: list[int]


class RunSummaryOut(BaseModel):
    success_count: int
    wall_events: int
    visibility_estimate: VisibilityEstimateOut | None
    histograms: dict[str, HistogramOut]


class SimulateResponse(BaseModel):
    device: str
    seed: int
    n_photons: int
    summary: RunSummaryOut
    records: list[RecordOut]


class DeviceListResponse(BaseModel):
    devices: list[str]
    source: str
