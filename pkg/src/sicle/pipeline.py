"""Oversample, then alternate IFT delineation and seed removal until ``nf`` seeds remain."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .graph import Topology
from .ift import ArcCost, ForestState, run_ift
from .imgio import DimensionMismatchError, Image, LabelMap, SaliencyMap, uniform_saliency
from .removal import Criterion, RelevanceCriterion, Schedule, seeds_to_keep, select_survivors
from .seeding import Sampling, SamplingSpec, sample

__all__ = ["SicleConfig", "SegmentationResult", "default_config", "segment", "target_sequence", "with_nf"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SicleConfig:
    sampling: SamplingSpec
    mode: ArcCost
    criterion: RelevanceCriterion
    schedule: Schedule
    emit_scales: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "emit_scales", frozenset(int(k) for k in self.emit_scales))
        object.__setattr__(self, "mode", ArcCost(self.mode))
        if self.sampling.n0 != self.schedule.n0:
            raise ValueError("sampling and schedule disagree on n0")
        for k in self.emit_scales:
            if not self.schedule.nf <= k <= self.schedule.n0:
                raise ValueError(f"scale {k} outside [nf={self.schedule.nf}, n0={self.schedule.n0}]")
        explicit = self.schedule.explicit_scales
        if explicit is not None:
            produced = {self.schedule.n0, *explicit}
            missing = sorted(self.emit_scales - produced, reverse=True)
            if missing:
                raise ValueError(f"scales {missing} are not produced by the explicit schedule")

    @property
    def n0(self) -> int:
        return self.schedule.n0

    @property
    def nf(self) -> int:
        return self.schedule.nf


@dataclass(frozen=True, eq=False)
class SegmentationResult:
    final: LabelMap
    scales: dict
    iterations_run: int
    per_iteration_seed_counts: list
    seeds: np.ndarray
    initial_seeds: np.ndarray


def default_config(**overrides) -> SicleConfig:
    """RND oversampling of 3000 seeds, ROOT arc costs, object-modulated MINSC, at most 5 iterations.

    Keyword overrides: ``n0``, ``nf`` (default 100), ``omega_cap``, ``disf``,
    ``explicit_scales``, ``strategy``, ``rng_seed``, ``mode``, ``criterion``,
    ``object_modulated``, ``emit_scales``.
    """
    unknown = set(overrides) - {
        "n0", "nf", "omega_cap", "disf", "explicit_scales", "strategy",
        "rng_seed", "mode", "criterion", "object_modulated", "emit_scales",
    }
    if unknown:
        raise TypeError(f"unknown config fields: {sorted(unknown)}")
    n0 = overrides.get("n0", 3000)
    return SicleConfig(
        sampling=SamplingSpec(
            strategy=Sampling(overrides.get("strategy", Sampling.RND)),
            n0=n0,
            rng_seed=overrides.get("rng_seed", 0),
        ),
        mode=ArcCost(overrides.get("mode", ArcCost.ROOT)),
        criterion=RelevanceCriterion(
            base=Criterion(overrides.get("criterion", Criterion.MINSC)),
            object_modulated=overrides.get("object_modulated", True),
        ),
        schedule=Schedule(
            n0=n0,
            nf=overrides.get("nf", 100),
            omega_cap=overrides.get("omega_cap", 5),
            disf=overrides.get("disf", False),
            explicit_scales=overrides.get("explicit_scales"),
        ),
        emit_scales=frozenset(overrides.get("emit_scales", ())),
    )


def target_sequence(config: SicleConfig, start: int | None = None) -> list[int]:
    """Seed counts of every IFT execution, first to last.

    ``start`` is the actual initial count (GRID may not hit n0 exactly).
    Requested emit scales are forced into the sequence as exact targets, and
    iterations whose target would not remove any seed are skipped.
    """
    sched = config.schedule
    current = sched.n0 if start is None else start
    if current < sched.nf:
        raise ValueError(f"only {current} seeds sampled, fewer than nf={sched.nf}")
    pending = sorted((k for k in config.emit_scales if k < current), reverse=True)
    counts = [current]
    i = 0
    while current > sched.nf:
        i += 1
        target = min(seeds_to_keep(sched, i), current)
        while pending and pending[0] >= current:
            pending.pop(0)
        if pending and pending[0] > target:
            target = pending.pop(0)
        if target >= current:
            continue
        counts.append(target)
        current = target
    return counts


def _snapshot(forest: ForestState) -> LabelMap:
    return LabelMap(forest.label_image())


def segment(image: Image, saliency: SaliencyMap | None, config: SicleConfig) -> SegmentationResult:
    """Run the full oversampling / delineation / removal loop on ``image``.

    The returned ``scales`` maps each requested emit scale to its label map;
    ``final`` always has exactly ``config.nf`` superpixels.
    """
    if saliency is None:
        saliency = uniform_saliency(image.shape)
    elif saliency.shape != image.shape:
        raise DimensionMismatchError("saliency and image dimensions differ")
    if config.n0 > image.width * image.height:
        raise ValueError(f"n0={config.n0} exceeds the {image.width * image.height} pixels")

    # sampling draws from the root stream, the random criterion from a child
    root_ss = np.random.SeedSequence(config.sampling.rng_seed)
    criterion_rng = np.random.Generator(np.random.PCG64(root_ss.spawn(1)[0]))
    seeds = sample(config.sampling, image.width, image.height, rng_seed=root_ss)
    initial = seeds.copy()
    topology = Topology(image.width, image.height)
    targets = target_sequence(config, start=seeds.size)

    scales = {}
    counts = []
    forest = None
    for it, count in enumerate(targets):
        if it > 0:
            keep = select_survivors(stats, config.criterion, count, rng=criterion_rng)
            seeds = seeds[keep]
        assert seeds.size == count
        forest, stats = run_ift(image, topology, seeds, config.mode, saliency)
        counts.append(int(seeds.size))
        log.debug("iteration %d: %d seeds", it + 1, seeds.size)
        if seeds.size in config.emit_scales:
            scales[int(seeds.size)] = _snapshot(forest)

    final = _snapshot(forest)
    if config.nf in config.emit_scales:
        final = scales[config.nf]
    return SegmentationResult(
        final=final,
        scales=scales,
        iterations_run=len(counts),
        per_iteration_seed_counts=counts,
        seeds=seeds,
        initial_seeds=initial,
    )


def with_nf(config: SicleConfig, nf: int) -> SicleConfig:
    """Copy of ``config`` targeting ``nf`` superpixels, with no extra scales emitted."""
    return replace(config, schedule=replace(config.schedule, nf=nf), emit_scales=frozenset())
