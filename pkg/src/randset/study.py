"""Simulation-study orchestration: model realisations, paired and pooled experiments.

Squares and rectangles borrow their size laws from reference Boolean
realisations, so a study needs the Boolean parameters even when it does not
compare Boolean realisations directly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, partial

from .descriptors import describe_image
from .models import (BooleanParams, EllipseParams, EmpiricalLaw, Window, component_count_law,
                     empirical_ratio_distribution, simulate_boolean, simulate_ellipses, simulate_rectangles,
                     simulate_reduced_boolean, simulate_squares, square_perimeter_law)
from .permtest import (PermutationConfig, TestOutcome, _map, bootstrap_outcomes, derive_seed, joint_similarity_test,
                       rng_stream, sample_components)

MODELS = ("boolean", "reduced-boolean", "squares", "rectangles", "ellipses")

# stream tags under the master seed
_REF_TAG = 100
_SIDE_TAGS = (101, 102)
_PAIR_SAMPLE_TAG = 103
_POOL_TAGS = (104, 105)


@dataclass
class StudyConfig:
    """Model parameters plus the component filters applied before description."""

    boolean: BooleanParams = field(default_factory=BooleanParams)
    ellipse: EllipseParams = field(default_factory=EllipseParams)
    window: Window = field(default_factory=Window)
    p_delete: float = 0.5
    fixed_side: int = 4
    reference: int = 100
    connectivity: int = 8
    min_pixels: int = 1
    discard_border: bool = True
    restrict: bool = True
    ratio_law: EmpiricalLaw | None = None
    count_law: EmpiricalLaw | float | None = None
    perimeter_law: EmpiricalLaw | None = None


class ModelFactory:
    """Realises any study model from an integer seed; reference laws are built on first use."""

    def __init__(self, cfg: StudyConfig, seed: int):
        self.cfg = cfg
        self.seed = seed

    @cached_property
    def _reference(self):
        return [simulate_boolean(self.cfg.boolean, self.cfg.window, derive_seed(self.seed, _REF_TAG, i))
                for i in range(self.cfg.reference)]

    @cached_property
    def ratio_law(self) -> EmpiricalLaw:
        if self.cfg.ratio_law is not None:
            return self.cfg.ratio_law
        c = self.cfg
        return empirical_ratio_distribution(self._reference, c.connectivity, c.min_pixels, c.discard_border)

    @cached_property
    def count_law(self):
        if self.cfg.count_law is not None:
            return self.cfg.count_law
        # every component counts, so box models match the Boolean density in the window
        return component_count_law(self._reference, self.cfg.connectivity)

    @cached_property
    def perimeter_law(self) -> EmpiricalLaw:
        if self.cfg.perimeter_law is not None:
            return self.cfg.perimeter_law
        return square_perimeter_law(self.ratio_law)

    def realise(self, model: str, seed: int):
        c = self.cfg
        if model == "boolean":
            return simulate_boolean(c.boolean, c.window, seed)
        if model == "reduced-boolean":
            return simulate_reduced_boolean(c.boolean, c.window, seed, c.p_delete, c.connectivity)
        if model == "squares":
            return simulate_squares(self.ratio_law, self.count_law, c.window, seed)
        if model == "rectangles":
            return simulate_rectangles(self.perimeter_law, self.count_law, c.window, seed, c.fixed_side)
        if model == "ellipses":
            return simulate_ellipses(c.ellipse, c.window, seed)
        raise ValueError(f"unknown model {model!r}; choose from {', '.join(MODELS)}")

    def describe(self, img, pcfg: PermutationConfig):
        c = self.cfg
        return describe_image(img, pcfg.radius, pcfg.bins, c.restrict, c.connectivity, c.min_pixels,
                              c.discard_border)

    def prepare(self, *models):
        """Build the reference laws now (before work is shipped to worker processes)."""
        if {"squares", "rectangles"} & set(models):
            self.ratio_law, self.count_law, self.perimeter_law  # noqa: B018


def _paired_run(i, factory, model_a, model_b, k, pcfg):
    da = factory.describe(factory.realise(model_a, derive_seed(pcfg.seed, _SIDE_TAGS[0], i)), pcfg)
    db = factory.describe(factory.realise(model_b, derive_seed(pcfg.seed, _SIDE_TAGS[1], i)), pcfg)
    rng = rng_stream(pcfg.seed, _PAIR_SAMPLE_TAG, i)
    return joint_similarity_test(sample_components(da, k, rng), sample_components(db, k, rng), pcfg,
                                 stream=(_PAIR_SAMPLE_TAG, i))


def paired_experiment(model_a, model_b, n_pairs=100, k=10, pcfg=PermutationConfig(), scfg=None,
                      workers=1) -> list[TestOutcome]:
    """One joint test per realisation pair, on ``k`` components sampled from each realisation."""
    factory = ModelFactory(scfg or StudyConfig(), pcfg.seed)
    factory.prepare(model_a, model_b)
    fn = partial(_paired_run, factory=factory, model_a=model_a, model_b=model_b, k=k, pcfg=pcfg)
    return _map(fn, range(n_pairs), workers)


def _pool(factory, model, n, tag, pcfg):
    return [d for i in range(n)
            for d in factory.describe(factory.realise(model, derive_seed(pcfg.seed, tag, i)), pcfg)]


def model_pool(model, n_realisations, pcfg, scfg=None, side=0):
    factory = ModelFactory(scfg or StudyConfig(), pcfg.seed)
    return _pool(factory, model, n_realisations, _POOL_TAGS[side], pcfg)


def pooled_experiment(model_a, model_b, n_realisations=100, k=100, repeats=100, pcfg=PermutationConfig(),
                      scfg=None, workers=1) -> list[TestOutcome]:
    """Pool every component of ``n_realisations`` per model, then bootstrap ``k``-vs-``k`` tests."""
    factory = ModelFactory(scfg or StudyConfig(), pcfg.seed)
    factory.prepare(model_a, model_b)
    pool_a = _pool(factory, model_a, n_realisations, _POOL_TAGS[0], pcfg)
    pool_b = _pool(factory, model_b, n_realisations, _POOL_TAGS[1], pcfg)
    return bootstrap_outcomes(pool_a, pool_b, k, repeats, pcfg, workers)
