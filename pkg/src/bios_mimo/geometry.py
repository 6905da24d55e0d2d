"""Array responses, path sampling, and channel synthesis for a bilayer omni-surface link.

Conventions: the spatial frequency of a half-wavelength ULA response is
cos(angle); the planar surface response factors along its two axes with
frequencies -sin(elevation)*sin(azimuth) and -sin(elevation)*cos(azimuth),
with elevation measured from the surface normal. The reflection side is
labelled "fle", the refraction side "fra".
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FLE = "fle"
FRA = "fra"
SIDES = (FLE, FRA)

ROLE_SURFACE_BS = "bios-bs"
ROLE_UE_SURFACE = "ue-bios"

# Singular values below this fraction of the largest count as zero rank.
RANK_RTOL = 1e-10


@dataclass
class ArrayGeometry:
    """Physical layout of the BS/UE linear arrays and the two surface layers."""

    n_bs: int = 8
    n_ue: int = 8
    m_x: int = 7
    m_y: int = 7
    wavelength: float = 0.03
    element_spacing: float | None = None  # defaults to wavelength / 2
    layer_gap: float = 0.03
    element_size: float | None = None  # defaults to wavelength / 2

    def __post_init__(self):
        if min(self.n_bs, self.n_ue, self.m_x, self.m_y) < 1:
            raise ValueError("all element counts must be >= 1")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        if self.element_spacing is None:
            self.element_spacing = self.wavelength / 2
        if self.element_size is None:
            self.element_size = self.wavelength / 2
        if self.layer_gap <= 0:
            raise ValueError("layer_gap must be positive")
        if self.element_size <= 0:
            raise ValueError("element_size must be positive")

    @property
    def m(self) -> int:
        return self.m_x * self.m_y


@dataclass
class PathSet:
    """Parameters of the propagation paths of one channel matrix.

    ``array_angle`` is the AoA at the BS (surface-BS role) or the AoD at the
    UE (UE-surface role). The surface angles are the elevation/azimuth of the
    departure (surface-BS) or arrival (UE-surface) directions.
    """

    gains: np.ndarray
    array_angle: np.ndarray
    bios_elevation: np.ndarray
    bios_azimuth: np.ndarray

    def __post_init__(self):
        self.gains = np.asarray(self.gains, dtype=complex)
        self.array_angle = np.asarray(self.array_angle, dtype=float)
        self.bios_elevation = np.asarray(self.bios_elevation, dtype=float)
        self.bios_azimuth = np.asarray(self.bios_azimuth, dtype=float)
        n = self.gains.shape[0]
        if n < 1:
            raise ValueError("a PathSet needs at least one path")
        for name in ("array_angle", "bios_elevation", "bios_azimuth"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"{name} must have one entry per path")
        if np.any(self.bios_elevation < 0) or np.any(self.bios_elevation > np.pi):
            raise ValueError("elevations must lie in [0, pi]")
        if np.any(self.bios_azimuth < 0) or np.any(self.bios_azimuth >= 2 * np.pi):
            raise ValueError("azimuths must lie in [0, 2*pi)")

    @property
    def count(self) -> int:
        return self.gains.shape[0]


@dataclass
class DictionaryConfig:
    """Angular dictionary resolutions and the span of the surface grids.

    ``bios_span`` selects the surface grid: "diagonal" places the points on
    [-sqrt(2)/2, sqrt(2)/2] (the physically reachable frequencies given the
    elevation ranges), "full" on [-1, 1) with step 2/G, which makes the
    dictionary exactly unitary when G equals the element count.
    """

    g_bs: int | None = None
    g_ue: int | None = None
    g_x: int | None = None
    g_y: int | None = None
    bios_span: str = "diagonal"

    def __post_init__(self):
        if self.bios_span not in ("diagonal", "full"):
            raise ValueError("bios_span must be 'diagonal' or 'full'")


@dataclass
class Dictionaries:
    a_bs: np.ndarray
    a_ue: np.ndarray
    a_x: np.ndarray
    a_y: np.ndarray
    grid_bs: np.ndarray
    grid_ue: np.ndarray
    grid_x: np.ndarray
    grid_y: np.ndarray
    a_i: np.ndarray = field(init=False)

    def __post_init__(self):
        self.a_i = np.kron(self.a_x, self.a_y)


@dataclass
class ChannelRealization:
    """One draw of the surface-BS channel g, the K UE-surface channels h,
    and the deterministic inter-layer coupling l. Path metadata is kept for
    sampled realizations and absent for estimate-backed ones."""

    g: np.ndarray
    h: list[np.ndarray]
    l: np.ndarray
    k_fle: int
    g_paths: PathSet | None = None
    h_paths: list[PathSet] | None = None

    @property
    def n_ues(self) -> int:
        return len(self.h)

    def side(self, k: int) -> str:
        """Side label of UE k (0-based)."""
        return FLE if k < self.k_fle else FRA


def ula_response(n: int, x: float) -> np.ndarray:
    """Unit-norm response of an n-element half-wavelength ULA at spatial frequency x."""
    if n < 1:
        raise ValueError("array size must be >= 1")
    return np.exp(1j * np.pi * x * np.arange(n)) / np.sqrt(n)


def upa_response(m_x: int, m_y: int, elevation: float, azimuth: float) -> np.ndarray:
    """Unit-norm planar surface response, Kronecker of the two axis responses."""
    fx = -np.sin(elevation) * np.sin(azimuth)
    fy = -np.sin(elevation) * np.cos(azimuth)
    return np.kron(ula_response(m_x, fx), ula_response(m_y, fy))


def radiation_pattern(elevation: float) -> float:
    """Normalized element power pattern |cos^3(elevation)|, in [0, 1]."""
    return np.abs(np.cos(elevation)) ** 3


def sample_paths(rng: np.random.Generator, count: int, side: str) -> PathSet:
    """Draw path gains and angles for one channel.

    The first path is line-of-sight with unit-variance complex Gaussian gain;
    the remaining paths have variance 0.1. BS/UE angles are uniform on
    [0, pi]; surface azimuths uniform on [0, 2*pi); surface elevations uniform
    on [0, pi/4] for the reflection side and [3*pi/4, pi] for the refraction
    side.
    """
    if count < 1:
        raise ValueError("need at least one path")
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}")
    scale = np.full(count, np.sqrt(0.1 / 2))
    scale[0] = np.sqrt(1 / 2)
    gains = scale * (rng.standard_normal(count) + 1j * rng.standard_normal(count))
    array_angle = rng.uniform(0.0, np.pi, size=count)
    azimuth = rng.uniform(0.0, 2 * np.pi, size=count)
    if side == FLE:
        elevation = rng.uniform(0.0, np.pi / 4, size=count)
    else:
        elevation = rng.uniform(3 * np.pi / 4, np.pi, size=count)
    return PathSet(gains, array_angle, elevation, azimuth)


def synth_channel(paths: PathSet, geometry: ArrayGeometry, role: str) -> np.ndarray:
    """Superpose the path contributions into a channel matrix.

    Role "bios-bs" yields the n_bs x m surface-to-BS matrix; "ue-bios" the
    m x n_ue UE-to-surface matrix. The output rank equals the path count
    whenever the smaller dimension allows it and the angles are distinct.
    """
    m = geometry.m
    if role == ROLE_SURFACE_BS:
        out = np.zeros((geometry.n_bs, m), dtype=complex)
        norm = np.sqrt(geometry.n_bs * m / paths.count)
        for p in range(paths.count):
            a_arr = ula_response(geometry.n_bs, np.cos(paths.array_angle[p]))
            a_sur = upa_response(
                geometry.m_x, geometry.m_y, paths.bios_elevation[p], paths.bios_azimuth[p]
            )
            amp = np.sqrt(radiation_pattern(paths.bios_elevation[p])) * paths.gains[p]
            out += amp * np.outer(a_arr, a_sur.conj())
        return norm * out
    if role == ROLE_UE_SURFACE:
        out = np.zeros((m, geometry.n_ue), dtype=complex)
        norm = np.sqrt(geometry.n_ue * m / paths.count)
        for q in range(paths.count):
            a_sur = upa_response(
                geometry.m_x, geometry.m_y, paths.bios_elevation[q], paths.bios_azimuth[q]
            )
            a_arr = ula_response(geometry.n_ue, np.cos(paths.array_angle[q]))
            amp = np.sqrt(radiation_pattern(paths.bios_elevation[q])) * paths.gains[q]
            out += amp * np.outer(a_sur, a_arr.conj())
        return norm * out
    raise ValueError(f"unknown role {role!r}")


def _layer_positions(geometry: ArrayGeometry) -> np.ndarray:
    """Lateral (x, y) element positions of one layer, ordered to match the
    Kronecker indexing of the surface response (x-axis major)."""
    s = geometry.element_spacing
    ix, iy = np.meshgrid(
        np.arange(geometry.m_x), np.arange(geometry.m_y), indexing="ij"
    )
    return np.column_stack([ix.ravel() * s, iy.ravel() * s])


def near_field_l(geometry: ArrayGeometry) -> np.ndarray:
    """Deterministic near-field coupling matrix between the two surface layers.

    Entry (m1, m2) combines the element patterns seen along the inter-element
    ray, the 1/d amplitude decay, and the propagation phase over the element
    distance d. Both layers share the same lateral grid, separated by
    layer_gap along the normal, so the matrix is symmetric.
    """
    pos = _layer_positions(geometry)
    gap = geometry.layer_gap
    diff = pos[:, None, :] - pos[None, :, :]
    d = np.sqrt(gap**2 + np.sum(diff**2, axis=-1))
    if np.any(d == 0):
        raise ValueError("coincident elements between the layers")
    cos_theta = gap / d
    # pattern term |cos^3|, once per layer, under the square root
    amp = geometry.element_size * cos_theta**3 * np.sqrt(2 / np.pi) / d
    return amp * np.exp(-2j * np.pi * d / geometry.wavelength)


def _linear_grid(g: int) -> np.ndarray:
    return -1.0 + 2.0 * np.arange(g) / g


def _diagonal_grid(g: int) -> np.ndarray:
    if g == 1:
        return np.zeros(1)
    half = np.sqrt(2) / 2
    return -half + np.sqrt(2) * np.arange(g) / (g - 1)


def _response_matrix(n: int, grid: np.ndarray) -> np.ndarray:
    return np.column_stack([ula_response(n, x) for x in grid])


def build_dictionaries(
    geometry: ArrayGeometry, config: DictionaryConfig | None = None
) -> Dictionaries:
    """Assemble the BS/UE/surface angular dictionaries over uniform grids.

    Resolutions default to the element counts, in which case the BS and UE
    dictionaries are exactly unitary; the surface dictionary is unitary only
    for the "full" span and near-unitary for the default "diagonal" span.
    """
    config = config or DictionaryConfig()
    g_bs = config.g_bs or geometry.n_bs
    g_ue = config.g_ue or geometry.n_ue
    g_x = config.g_x or geometry.m_x
    g_y = config.g_y or geometry.m_y
    if min(g_bs, g_ue, g_x, g_y) < 1:
        raise ValueError("grid resolutions must be >= 1")
    grid_bs = _linear_grid(g_bs)
    grid_ue = _linear_grid(g_ue)
    if config.bios_span == "diagonal":
        grid_x, grid_y = _diagonal_grid(g_x), _diagonal_grid(g_y)
    else:
        grid_x, grid_y = _linear_grid(g_x), _linear_grid(g_y)
    return Dictionaries(
        a_bs=_response_matrix(geometry.n_bs, grid_bs),
        a_ue=_response_matrix(geometry.n_ue, grid_ue),
        a_x=_response_matrix(geometry.m_x, grid_x),
        a_y=_response_matrix(geometry.m_y, grid_y),
        grid_bs=grid_bs,
        grid_ue=grid_ue,
        grid_x=grid_x,
        grid_y=grid_y,
    )


def angular_transform(x: np.ndarray, a_left: np.ndarray, a_right: np.ndarray) -> np.ndarray:
    """Column-major vectorization of a_left^H @ x @ a_right."""
    if a_left.shape[0] != x.shape[0] or x.shape[1] != a_right.shape[0]:
        raise ValueError("dictionary shapes do not conform to the matrix")
    return (a_left.conj().T @ x @ a_right).ravel(order="F")


def sample_paths_on_grid(
    rng: np.random.Generator,
    count: int,
    geometry: ArrayGeometry,
    role: str,
) -> PathSet:
    """Draw paths whose spatial frequencies sit exactly on the full-span
    element-count grids, with distinct grid cells per path.

    Surface frequency pairs are restricted to squared radius <= 1/2 so the
    implied elevation stays within [0, pi/4] and the element pattern stays
    bounded away from zero. Used by the exact-sparsity checks.
    """
    n_arr = geometry.n_bs if role == ROLE_SURFACE_BS else geometry.n_ue
    if count > n_arr:
        raise ValueError("need count <= array size for distinct grid angles")
    grid_arr = _linear_grid(n_arr)
    arr_idx = rng.choice(n_arr, size=count, replace=False)
    array_angle = np.arccos(grid_arr[arr_idx])

    gx, gy = _linear_grid(geometry.m_x), _linear_grid(geometry.m_y)
    pairs = [
        (i, j)
        for i in range(geometry.m_x)
        for j in range(geometry.m_y)
        if gx[i] ** 2 + gy[j] ** 2 <= 0.5
    ]
    if count > len(pairs):
        raise ValueError("not enough in-range surface grid cells")
    chosen = rng.choice(len(pairs), size=count, replace=False)
    elevation = np.empty(count)
    azimuth = np.empty(count)
    for p, c in enumerate(chosen):
        fx, fy = gx[pairs[c][0]], gy[pairs[c][1]]
        r = np.hypot(fx, fy)
        elevation[p] = np.arcsin(r)
        azimuth[p] = np.arctan2(-fx, -fy) % (2 * np.pi) if r > 0 else 0.0

    scale = np.full(count, np.sqrt(0.1 / 2))
    scale[0] = np.sqrt(1 / 2)
    gains = scale * (rng.standard_normal(count) + 1j * rng.standard_normal(count))
    return PathSet(gains, array_angle, elevation, azimuth)


def numerical_rank(x: np.ndarray, rtol: float = RANK_RTOL) -> int:
    s = np.linalg.svd(x, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def draw_channel_set(
    rng: np.random.Generator,
    geometry: ArrayGeometry,
    k_fle: int,
    k_fra: int,
    p: int,
    q: int,
) -> ChannelRealization:
    """Draw a full realization: one surface-BS channel (reflection-side
    departure angles, shared by all UEs) plus per-UE surface channels."""
    g_paths = sample_paths(rng, p, FLE)
    g = synth_channel(g_paths, geometry, ROLE_SURFACE_BS)
    h, h_paths = [], []
    for k in range(k_fle + k_fra):
        side = FLE if k < k_fle else FRA
        paths = sample_paths(rng, q, side)
        h_paths.append(paths)
        h.append(synth_channel(paths, geometry, ROLE_UE_SURFACE))
    return ChannelRealization(
        g=g, h=h, l=near_field_l(geometry), g_paths=g_paths, h_paths=h_paths, k_fle=k_fle
    )


def redraw_ue_channels(
    rng: np.random.Generator, realization: ChannelRealization, geometry: ArrayGeometry
) -> ChannelRealization:
    """New small-timescale draw: fresh UE-surface channels, same g and l."""
    if realization.h_paths is None:
        raise ValueError("can only redraw a sampled realization")
    q = realization.h_paths[0].count
    h, h_paths = [], []
    for k in range(realization.n_ues):
        paths = sample_paths(rng, q, realization.side(k))
        h_paths.append(paths)
        h.append(synth_channel(paths, geometry, ROLE_UE_SURFACE))
    return ChannelRealization(
        g=realization.g,
        h=h,
        l=realization.l,
        g_paths=realization.g_paths,
        h_paths=h_paths,
        k_fle=realization.k_fle,
    )
