"""Cellular benchmark domain: synthetic sectorized networks, radio propagation
(Okumura-Hata / COST-231 / SUI), parabolic tilt+azimuth antenna pattern, and the
average-SINR objective evaluated on a raster grid."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .network import Element, Network, ParameterSpec

MODELS = ("okumura_hata", "cost231", "sui")
AREA_TYPES = ("urban", "suburban", "open")

FREQ_RANGES_MHZ = {
    "okumura_hata": (150.0, 1500.0),
    "cost231": (1500.0, 2000.0),
    "sui": (1900.0, 11000.0),
}

MIN_DISTANCE_KM = 0.001  # 1 m floor for both propagation and correlation

# the four regulated antenna parameters, in element-vector order
WIRELESS_SPECS = [
    ParameterSpec("power_dbm", 30.0, 46.0),
    ParameterSpec("height_m", 15.0, 45.0),
    ParameterSpec("tilt_deg", 0.0, 15.0),
    ParameterSpec("azimuth_deg", 0.0, 360.0),
]


@dataclass(frozen=True)
class Antenna:
    site: tuple[float, float]  # meters
    power: float               # dBm
    height: float              # meters
    tilt: float                # degrees downtilt
    azimuth: float             # degrees

    @classmethod
    def from_element(cls, e: Element) -> "Antenna":
        p, h, t, az = e.params
        return cls(tuple(e.position), float(p), float(h), float(t), float(az))


@dataclass(frozen=True)
class PropagationConfig:
    model: str = "okumura_hata"
    frequency_mhz: float = 900.0
    area_type: str = "urban"
    receiver_height_m: float = 1.5
    noise_floor_dbm: float = -104.0

    def __post_init__(self) -> None:
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {MODELS}")
        if self.area_type not in AREA_TYPES:
            raise ValueError(f"unknown area type {self.area_type!r}; choose from {AREA_TYPES}")
        lo, hi = FREQ_RANGES_MHZ[self.model]
        if not lo <= self.frequency_mhz <= hi:
            raise ValueError(
                f"{self.model}: frequency {self.frequency_mhz} MHz outside valid range [{lo}, {hi}] MHz")


@dataclass(frozen=True)
class Grid:
    """Rectangular raster: origin (meters), cell counts, resolution (meters)."""

    x0: float
    y0: float
    nx: int
    ny: int
    resolution: float

    @property
    def n_points(self) -> int:
        return self.nx * self.ny

    def points(self) -> np.ndarray:
        """(n_points, 2) cell-center coordinates, row-major in y then x."""
        xs = self.x0 + (np.arange(self.nx) + 0.5) * self.resolution
        ys = self.y0 + (np.arange(self.ny) + 0.5) * self.resolution
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack([gx.ravel(), gy.ravel()])

    @classmethod
    def covering(cls, area_m: float, resolution: float) -> "Grid":
        n = max(1, int(round(area_m / resolution)))
        return cls(0.0, 0.0, n, n, resolution)


# ---- propagation models ------------------------------------------------------


def _hata_a_hm(f: float, hm: float) -> float:
    # small/medium city mobile-antenna correction
    lf = math.log10(f)
    return (1.1 * lf - 0.7) * hm - (1.56 * lf - 0.8)


def _okumura_hata(f: float, hb, hm: float, d_km, area: str):
    lf = math.log10(f)
    lhb = np.log10(hb)
    urban = (69.55 + 26.16 * lf - 13.82 * lhb - _hata_a_hm(f, hm)
             + (44.9 - 6.55 * lhb) * np.log10(d_km))
    if area == "urban":
        return urban
    if area == "suburban":
        return urban - 2.0 * math.log10(f / 28.0) ** 2 - 5.4
    return urban - 4.78 * lf ** 2 + 18.33 * lf - 40.94  # open


def _cost231(f: float, hb, hm: float, d_km, area: str):
    lf = math.log10(f)
    lhb = np.log10(hb)
    c_m = 3.0 if area == "urban" else 0.0
    return (46.3 + 33.9 * lf - 13.82 * lhb - _hata_a_hm(f, hm)
            + (44.9 - 6.55 * lhb) * np.log10(d_km) + c_m)


_SUI_TERRAIN = {  # (a, b, c) by terrain class; urban->A, suburban->B, open->C
    "urban": (4.6, 0.0075, 12.6),
    "suburban": (4.0, 0.0065, 17.1),
    "open": (3.6, 0.005, 20.0),
}


def _sui(f: float, hb, hm: float, d_km, area: str):
    a, b, c = _SUI_TERRAIN[area]
    d0_m = 100.0
    lam_m = 299.792458 / f  # c / f with f in MHz gives wavelength in meters
    a_fs = 20.0 * math.log10(4.0 * math.pi * d0_m / lam_m)
    gamma = a - b * np.asarray(hb, dtype=float) + c / np.asarray(hb, dtype=float)
    xf = 6.0 * math.log10(f / 2000.0)
    if area == "open":
        xh = -20.0 * math.log10(hm / 2.0)
    else:
        xh = -10.8 * math.log10(hm / 2.0)
    return a_fs + 10.0 * gamma * np.log10(np.asarray(d_km) * 1000.0 / d0_m) + xf + xh


def path_loss(cfg: PropagationConfig, tx_height_m, distance_km):
    """Path loss in dB for the configured model; accepts scalar or array distance."""
    if np.any(np.asarray(tx_height_m) <= cfg.receiver_height_m):
        raise ValueError("transmitter must be above the receiver height")
    d = np.maximum(np.asarray(distance_km, dtype=float), MIN_DISTANCE_KM)
    f, hm, area = cfg.frequency_mhz, cfg.receiver_height_m, cfg.area_type
    if cfg.model == "okumura_hata":
        out = _okumura_hata(f, tx_height_m, hm, d, area)
    elif cfg.model == "cost231":
        out = _cost231(f, tx_height_m, hm, d, area)
    else:
        out = _sui(f, tx_height_m, hm, d, area)
    if np.ndim(distance_km) == 0 and np.ndim(tx_height_m) == 0:
        return float(out)
    return np.asarray(out)


def pattern_gain(tilt, azimuth, bearing_to_point, depression_to_point):
    """Parabolic sector-antenna gain in dB (<= 0), 65 deg / 10 deg half patterns."""
    daz = np.mod(np.asarray(bearing_to_point) - np.asarray(azimuth) + 180.0, 360.0) - 180.0
    dv = np.asarray(depression_to_point) - np.asarray(tilt)
    a_h = np.minimum(12.0 * (daz / 65.0) ** 2, 30.0)
    a_v = np.minimum(12.0 * (dv / 10.0) ** 2, 20.0)
    out = -np.minimum(a_h + a_v, 30.0)
    return out if out.ndim else float(out)


def _geometry(site: np.ndarray, points: np.ndarray, tx_height: float, rx_height: float):
    """Distance (km), bearing (deg) and depression angle (deg) from one antenna to points."""
    dx = points[:, 0] - site[0]
    dy = points[:, 1] - site[1]
    horiz_m = np.hypot(dx, dy)
    bearing = np.degrees(np.arctan2(dy, dx)) % 360.0
    depression = np.degrees(np.arctan2(tx_height - rx_height, np.maximum(horiz_m, 1.0)))
    return np.maximum(horiz_m / 1000.0, MIN_DISTANCE_KM), bearing, depression


def received_power(a: Antenna, point: tuple[float, float], cfg: PropagationConfig) -> float:
    """Received power (dBm) at one point: tx power minus path loss plus pattern gain."""
    d_km, bearing, depression = _geometry(
        np.asarray(a.site, dtype=float), np.asarray([point], dtype=float),
        a.height, cfg.receiver_height_m)
    pl = path_loss(cfg, a.height, d_km)
    g = pattern_gain(a.tilt, a.azimuth, bearing, depression)
    return float((a.power - np.asarray(pl) + np.asarray(g))[0])


def sinr_at(point: tuple[float, float], antennas: list[Antenna], cfg: PropagationConfig) -> float:
    """SINR (dB) at one point: strongest server over the other signals plus noise, linear domain."""
    if not antennas:
        raise ValueError("need at least one antenna")
    rx = np.array([received_power(a, point, cfg) for a in antennas])
    lin = 10.0 ** (rx / 10.0)
    s_idx = int(np.argmax(rx))  # argmax takes the first maximum: lowest antenna id on ties
    noise = 10.0 ** (cfg.noise_floor_dbm / 10.0)
    interference = lin.sum() - lin[s_idx]
    return float(10.0 * np.log10(lin[s_idx] / (interference + noise)))


@dataclass
class SinrField:
    grid: Grid
    sinr_db: np.ndarray   # (n_points,)
    server: np.ndarray    # (n_points,) antenna id

    def to_csv(self, path: str | Path) -> None:
        pts = self.grid.points()
        with open(path, "w") as f:
            f.write("x,y,sinr_db,server_id\n")
            for (x, y), s, sv in zip(pts, self.sinr_db, self.server):
                f.write(f"{x:.3f},{y:.3f},{s:.6f},{int(sv)}\n")


class SinrEvaluator:
    """Raster SINR objective over a fixed grid with cached per-antenna geometry.

    Antenna positions never change during a run, so distances and bearings to all
    grid points are computed once; a parameter update only re-evaluates path loss
    and pattern gain for the touched antennas.
    """

    def __init__(self, net: Network, grid: Grid, cfg: PropagationConfig):
        if net.n_params != 4:
            raise ValueError("wireless networks carry exactly 4 parameters per antenna")
        self.cfg = cfg
        self.grid = grid
        self.n = net.n
        self._bounds = net.bounds()
        pts = grid.points()
        pos = net.positions()
        self._dist_km = np.empty((net.n, grid.n_points))
        self._bearing = np.empty((net.n, grid.n_points))
        dx = pts[:, 0][None, :] - pos[:, 0][:, None]
        dy = pts[:, 1][None, :] - pos[:, 1][:, None]
        horiz_m = np.hypot(dx, dy)
        self._dist_km = np.maximum(horiz_m / 1000.0, MIN_DISTANCE_KM)
        self._bearing = np.degrees(np.arctan2(dy, dx)) % 360.0
        self._horiz_m = np.maximum(horiz_m, 1.0)
        self._noise_lin = 10.0 ** (cfg.noise_floor_dbm / 10.0)

    def rx_rows(self, params: np.ndarray, ids: np.ndarray, cols: slice | np.ndarray = slice(None)) -> np.ndarray:
        """Received power (dBm) of the given antennas at the given grid columns."""
        ids = np.asarray(ids, dtype=int)
        power, height, tilt, azim = (params[ids, k] for k in range(4))
        d = self._dist_km[ids][:, cols]
        bearing = self._bearing[ids][:, cols]
        depression = np.degrees(np.arctan2(
            (height - self.cfg.receiver_height_m)[:, None], self._horiz_m[ids][:, cols]))
        pl = path_loss(self.cfg, height[:, None], d)
        g = pattern_gain(tilt[:, None], azim[:, None], bearing, depression)
        return power[:, None] - pl + g

    def rx_matrix(self, params: np.ndarray) -> np.ndarray:
        return self.rx_rows(params, np.arange(self.n))

    def field(self, params: np.ndarray) -> SinrField:
        rx = self.rx_matrix(params)
        lin = 10.0 ** (rx / 10.0)
        server = np.argmax(rx, axis=0)  # first max: lowest id wins ties
        s_lin = lin[server, np.arange(lin.shape[1])]
        interference = lin.sum(axis=0) - s_lin
        sinr = 10.0 * np.log10(s_lin / (interference + self._noise_lin))
        return SinrField(self.grid, sinr, server)

    def global_quality(self, params: np.ndarray) -> float:
        """Average SINR (dB) over the whole grid: the benchmark objective."""
        return float(self.field(params).sinr_db.mean())

    def subnet_energy(self, params: np.ndarray, free_ids):
        """Energy closure for one subnet: negative mean SINR over the points currently
        served by the subnet's antennas, with every other antenna frozen."""
        free_ids = np.asarray(sorted(free_ids), dtype=int)
        rx = self.rx_matrix(params)
        server = np.argmax(rx, axis=0)
        region = np.nonzero(np.isin(server, free_ids))[0]
        if region.size == 0:
            return lambda state: 0.0
        frozen_ids = np.setdiff1d(np.arange(self.n), free_ids)
        if frozen_ids.size:
            frozen_lin = 10.0 ** (rx[frozen_ids][:, region] / 10.0)
            frozen_sum = frozen_lin.sum(axis=0)
            frozen_max = frozen_lin.max(axis=0)
        else:
            frozen_sum = np.zeros(region.size)
            frozen_max = np.zeros(region.size)
        noise = self._noise_lin

        def energy(state) -> float:
            free = np.asarray(state.free_params, dtype=float).reshape(free_ids.size, 4)
            p = params.copy()
            p[free_ids] = free
            rx_f = self.rx_rows(p, free_ids, region)
            lin_f = 10.0 ** (rx_f / 10.0)
            s_lin = np.maximum(frozen_max, lin_f.max(axis=0))
            interference = frozen_sum + lin_f.sum(axis=0) - s_lin
            sinr = 10.0 * np.log10(s_lin / (interference + noise))
            return -float(sinr.mean())

        return energy

    def region_weight(self, params: np.ndarray, member_ids) -> int:
        """Number of grid points served by the given antennas (aggregation weights)."""
        server = np.argmax(self.rx_matrix(params), axis=0)
        return int(np.isin(server, np.asarray(sorted(member_ids), dtype=int)).sum())


def average_sinr(net: Network, grid: Grid, cfg: PropagationConfig) -> float:
    """Mean SINR in dB over the grid (functional wrapper around SinrEvaluator)."""
    return SinrEvaluator(net, grid, cfg).global_quality(net.params_matrix())


def compute_sinr_field(net: Network, grid: Grid, cfg: PropagationConfig) -> SinrField:
    return SinrEvaluator(net, grid, cfg).field(net.params_matrix())


# ---- synthetic network generation ---------------------------------------------


def generate_network(sites: int, sectors_per_site: int, area_km: float, seed: int) -> Network:
    """Sites on a jittered hexagonal lattice over a square area; each site hosts
    sectors_per_site co-located antennas with evenly spaced, jittered azimuths."""
    if sites < 1 or sectors_per_site < 1:
        raise ValueError("sites and sectors_per_site must be >= 1")
    rng = np.random.default_rng(seed)
    area_m = area_km * 1000.0
    cols = int(math.ceil(math.sqrt(sites)))
    rows = int(math.ceil(sites / cols))
    pitch_x = area_m / cols
    pitch_y = area_m / rows
    positions = []
    for s in range(sites):
        r, c = divmod(s, cols)
        x = (c + 0.5 + (0.25 if r % 2 else 0.0)) * pitch_x
        y = (r + 0.5) * pitch_y
        x += rng.uniform(-0.05, 0.05) * pitch_x
        y += rng.uniform(-0.05, 0.05) * pitch_y
        positions.append((min(max(x, 0.0), area_m), min(max(y, 0.0), area_m)))

    specs = WIRELESS_SPECS
    elements = []
    eid = 0
    for s in range(sites):
        base_az = rng.uniform(0.0, 360.0)
        for sec in range(sectors_per_site):
            power = rng.uniform(specs[0].min, specs[0].max)
            height = rng.uniform(specs[1].min, specs[1].max)
            tilt = rng.uniform(specs[2].min, specs[2].max)
            az = (base_az + sec * 360.0 / sectors_per_site + rng.uniform(-10.0, 10.0)) % 360.0
            elements.append(Element(eid, positions[s], np.array([power, height, tilt, az])))
            eid += 1
    return Network(specs, elements)


def correlation_wireless(a: Element, b: Element) -> float:
    """Interaction strength between two antennas: inverse distance in km, floored at 1 m."""
    d_km = math.hypot(a.position[0] - b.position[0], a.position[1] - b.position[1]) / 1000.0
    return 1.0 / max(d_km, MIN_DISTANCE_KM)


def suggest_thresholds(net: Network) -> tuple[float, float]:
    """Filtering-threshold endpoints from the site geometry: at the low end edges
    reach a few site spacings out, at the high end only co-sited sectors survive."""
    pos = net.positions()
    uniq = np.unique(pos, axis=0)
    if len(uniq) < 2:
        return 0.5, 2.0
    d2 = np.sum((uniq[:, None, :] - uniq[None, :, :]) ** 2, axis=-1)
    np.fill_diagonal(d2, np.inf)
    d_nn_km = math.sqrt(d2.min()) / 1000.0
    return 1.0 / (1.5 * d_nn_km), 1.2 / d_nn_km
