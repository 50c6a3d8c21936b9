"""Tests for PGD, Pixel-AG, budget masks, the adaptive attack and sanity checks."""

import pytest
import torch

from pixelpart import (
    ArchitectureSpec,
    AttackSpec,
    BudgetMask,
    LossFn,
    LossKind,
    ProjectionMode,
    ShapeMismatchError,
    build_model,
)
from pixelpart.attack import (
    ADAPTIVE_EPS,
    SanityConfig,
    adaptive_pgd,
    adaptive_spec,
    cam_mask,
    generate_mask,
    pgd,
    pixel_ag,
    random_start_noise,
    robust_correct,
    run_attack,
    sanity_suite,
)
from pixelpart.core import MaskMode
from pixelpart.train import train

EPS = 8 / 255
EPS_LOW = 7 / 255
ALPHA = 2 / 255


def one_pixel(value=0.5):
    return torch.full((1, 1, 1, 1), value)


class TestGenerateMask:
    """Tests for the mask rule."""

    def test_rule_example(self):
        """omega = [1.5, 0.5, 2.0] gives m = [1, 7/8, 1]."""
        mask = generate_mask(torch.tensor([[1.5, 0.5, 2.0]]), EPS, EPS_LOW)
        assert mask.m[0, 0] == 1 and mask.m[0, 2] == 1
        assert float(mask.m[0, 1]) == pytest.approx(7 / 8)
        assert (mask.d_high, mask.d_low) == (2, 1)

    def test_all_unimportant(self):
        """Weights at or below 1 everywhere give the low ratio everywhere."""
        mask = generate_mask(torch.full((3, 3), 0.9), EPS, EPS_LOW)
        assert bool((mask.m == mask.ratio).all())

    def test_ties_are_unimportant(self):
        """omega exactly 1 is unimportant; anything above it is important."""
        mask = generate_mask(torch.tensor([[1.0, 1.0 + 1e-9]]), EPS, EPS_LOW)
        assert mask.m[0, 0] == mask.ratio and mask.m[0, 1] == 1

    def test_equal_budgets_give_ones(self):
        """eps_low = eps collapses the mask to all ones."""
        mask = generate_mask(torch.rand((4, 4)) * 2, EPS, EPS)
        assert mask.is_all_ones

    def test_degenerate_rows_are_ones(self):
        """Images with a degenerate CAM keep the full budget."""
        omega = torch.zeros((2, 2, 2))
        mask = generate_mask(omega, EPS, EPS_LOW, torch.tensor([True, False]))
        assert bool((mask.m[0] == 1).all())
        assert bool((mask.m[1] == mask.ratio).all())

    def test_cam_mask_from_model(self, cnn, batch, labels):
        """Every pixel of every image lands in exactly one region."""
        mask = cam_mask(cnn, batch, labels, EPS, EPS_LOW)
        assert mask.m.shape == (4, 8, 8)
        assert mask.d_high + mask.d_low == 4 * 8 * 8


class TestPgd:
    """Tests for the plain signed-gradient attack."""

    def test_single_step(self, pixel_net):
        """x = 0.5 with a positive gradient moves to 0.5 + alpha."""
        spec = AttackSpec(eps=EPS, eps_low=EPS, alpha=ALPHA, iterations=1, random_start=False)
        result = pgd(pixel_net, LossFn(), one_pixel(), torch.tensor([0]), spec)
        assert float(result.adversarial) == pytest.approx(0.5 + ALPHA, abs=1e-15)

    def test_projection_binds_at_eps(self, pixel_net):
        """Ten steps saturate at eps and never pass it."""
        spec = AttackSpec(eps=EPS, eps_low=EPS, alpha=ALPHA, iterations=10, random_start=False)
        result = pgd(pixel_net, LossFn(), one_pixel(), torch.tensor([0]), spec)
        delta = float(result.perturbation.delta)
        assert delta == pytest.approx(EPS, abs=1e-15)
        assert delta <= EPS + 1e-15

    def test_zero_gradient_is_fixed_point(self, constant_net, batch, labels):
        """sign(0) = 0, so without a random start nothing moves."""
        spec = AttackSpec(iterations=5, random_start=False)
        images = torch.rand((4, 3, 8, 8), generator=torch.Generator().manual_seed(1))
        result = pgd(constant_net, LossFn(), images, labels, spec)
        assert torch.equal(result.adversarial, images)

    def test_stays_in_box_and_image_range(self, cnn, batch, labels):
        """Adversarial images stay in the eps box and in [0, 1]."""
        result = pgd(cnn, LossFn(), batch, labels, AttackSpec(iterations=5))
        assert float(result.perturbation.linf().max()) <= EPS + 1e-12
        assert float(result.adversarial.min()) >= 0 and float(result.adversarial.max()) <= 1

    def test_trajectory_shape(self, cnn, batch, labels):
        """The trajectory has K + 1 rows, one per iterate plus the final image."""
        result = pgd(cnn, LossFn(), batch, labels, AttackSpec(iterations=3))
        assert result.loss_trajectory.shape == (4, 4)
        assert result.success.shape == (4,)

    def test_same_seed_is_deterministic(self, cnn, batch, labels):
        """Equal seeds give identical adversarial images."""
        a = pgd(cnn, LossFn(), batch, labels, AttackSpec(iterations=3), seed=4)
        b = pgd(cnn, LossFn(), batch, labels, AttackSpec(iterations=3), seed=4)
        assert torch.equal(a.adversarial, b.adversarial)

    def test_random_start_independent_of_batching(self, batch):
        """Each image draws from its own stream, keyed by its dataset index."""
        full = random_start_noise(batch, EPS, 7, [10, 11, 12, 13])
        part = random_start_noise(batch[2:], EPS, 7, [12, 13])
        assert torch.equal(full[2:], part)
        assert float(full.abs().max()) <= EPS

    def test_kl_inner_loss(self, cnn, batch, labels):
        """The KL inner loss stays non-negative along the trajectory."""
        result = pgd(cnn, LossFn(LossKind.KL_DIVERGENCE), batch, labels, AttackSpec(iterations=3))
        assert bool((result.loss_trajectory >= -1e-12).all())


class TestPixelAg:
    """Tests for the mask-reweighted attack."""

    def test_all_ones_mask_matches_pgd_bitwise(self, cnn, batch, labels):
        """An all-ones mask reproduces plain PGD exactly."""
        spec = AttackSpec(iterations=4)
        ones = BudgetMask.all_ones((8, 8), EPS, EPS)
        plain = pgd(cnn, LossFn(), batch, labels, spec, seed=3)
        masked = pixel_ag(cnn, LossFn(), batch, labels, spec, ones, seed=3)
        assert torch.equal(plain.adversarial, masked.adversarial)
        assert torch.equal(plain.loss_trajectory, masked.loss_trajectory)

    def test_one_masked_step(self, pixel_net):
        """m = 7/8, alpha = eps, K = 1 gives delta = 7/8 eps."""
        spec = AttackSpec(eps=EPS, eps_low=EPS_LOW, alpha=EPS, iterations=1, random_start=False)
        mask = generate_mask(torch.tensor([[0.5]]), EPS, EPS_LOW)
        result = pixel_ag(pixel_net, LossFn(), one_pixel(), torch.tensor([0]), spec, mask)
        assert float(result.perturbation.delta) == pytest.approx(EPS_LOW, abs=1e-15)

    @pytest.mark.parametrize("mode", list(ProjectionMode))
    def test_converges_to_masked_budget(self, pixel_net, mode):
        """Both projection modes settle at eps * m."""
        spec = AttackSpec(
            eps=EPS, eps_low=EPS_LOW, alpha=ALPHA, iterations=40, random_start=False,
            projection_mode=mode,
        )
        mask = generate_mask(torch.tensor([[0.5]]), EPS, EPS_LOW)
        result = pixel_ag(pixel_net, LossFn(), one_pixel(), torch.tensor([0]), spec, mask)
        delta = float(result.perturbation.delta)
        assert delta == pytest.approx(EPS_LOW, abs=1e-12)
        assert delta <= EPS * mask.ratio + 1e-15

    @pytest.mark.parametrize("mode", list(ProjectionMode))
    def test_budget_soundness(self, cnn, batch, labels, mode):
        """Every coordinate stays within eps * m_i."""
        spec = AttackSpec(iterations=6, projection_mode=mode)
        mask = cam_mask(cnn, batch, labels, EPS, EPS_LOW)
        result = pixel_ag(cnn, LossFn(), batch, labels, spec, mask, seed=2)
        assert result.budget_violation(batch) <= 1e-12

    def test_mask_shape_checked(self, cnn, batch, labels):
        """A mask of the wrong spatial size is rejected."""
        mask = BudgetMask.all_ones((4, 4), EPS, EPS_LOW)
        with pytest.raises(ShapeMismatchError):
            pixel_ag(cnn, LossFn(), batch, labels, AttackSpec(), mask)

    def test_run_attack_needs_mask(self, cnn, batch, labels):
        """Dispatching to pixel_ag without a mask is an error."""
        spec = AttackSpec(mask_mode=MaskMode.PIXEL_AG)
        with pytest.raises(ValueError, match="needs a budget mask"):
            run_attack(cnn, LossFn(), batch, labels, spec)


class TestAdaptiveAttack:
    """Tests for the attacker-side CAM attack."""

    def test_default_budgets(self):
        """The adaptive attacker uses 12/255 and 8/255."""
        spec = adaptive_spec()
        assert spec.eps == ADAPTIVE_EPS
        assert spec.eps_low == pytest.approx(8 / 255)
        assert spec.mask_mode is MaskMode.PIXEL_AG

    def test_equal_budgets_reduce_to_pgd(self, cnn, batch, labels):
        """Equal adaptive budgets behave like PGD."""
        adaptive = adaptive_pgd(cnn, LossFn(), batch, labels, eps_low=EPS, eps=EPS, iterations=3)
        plain = pgd(cnn, LossFn(), batch, labels, AttackSpec(eps=EPS, eps_low=EPS, iterations=3))
        assert torch.equal(adaptive.adversarial, plain.adversarial)

    def test_respects_larger_budget(self, cnn, batch, labels):
        """Adaptive perturbations stay inside their own masked budget."""
        result = adaptive_pgd(cnn, LossFn(), batch, labels, iterations=3)
        assert float(result.perturbation.linf().max()) <= ADAPTIVE_EPS + 1e-12
        assert result.budget_violation(batch) <= 1e-12


class TestRobustCorrect:
    """Tests for the robust-correctness rule."""

    def test_requires_natural_correctness(self, constant_net, batch):
        """A sample only counts as robust if it was classified correctly to begin with."""
        labels = torch.tensor([0, 1, 0, 1])
        flags = robust_correct(constant_net, batch, batch, labels)
        assert flags.tolist() == [True, False, True, False]


class TestSanitySuite:
    """Tests for the obfuscated-gradient checklist."""

    def test_unbounded_attack_always_succeeds(self, pixel_net):
        """The one-pixel model falls to an eps = 1 attack and passes the checklist."""
        images = torch.tensor([0.1, 0.4, 0.6, 0.9]).view(4, 1, 1, 1)
        labels = torch.tensor([0, 1, 1, 1])
        config = SanityConfig(iterations=5, sweep_iterations=5, random_draws=10)
        report = sanity_suite(pixel_net, images, labels, config=config)
        assert [item.name for item in report.items] == [
            "one_step_vs_iterative", "transfer", "unbounded", "random_sampling", "increasing_eps",
        ]
        assert report.item("unbounded").passed is True
        assert report.item("transfer").passed is None
        assert report.item("increasing_eps").passed is True

    def test_transfer_runs_with_surrogate(self, cnn, one_conv, batch, labels):
        """A surrogate model turns the transfer check on."""
        config = SanityConfig(iterations=2, unbounded_iterations=2, sweep_iterations=2, random_draws=4)
        report = sanity_suite(cnn, batch, labels, surrogate=one_conv, config=config)
        assert report.item("transfer").passed is not None
        with pytest.raises(KeyError):
            report.item("missing")


def random_attack_spec(generator):
    """An AttackSpec with budgets, step, iteration count and modes drawn at random."""

    def uniform(low, high):
        return low + (high - low) * float(torch.rand((), generator=generator))

    eps = uniform(1 / 255, 16 / 255)
    return AttackSpec(
        eps=eps,
        eps_low=eps * uniform(0.05, 1.0),
        alpha=eps * uniform(0.1, 1.5),
        iterations=int(torch.randint(1, 9, (), generator=generator)),
        random_start=bool(torch.randint(0, 2, (), generator=generator)),
        projection_mode=list(ProjectionMode)[int(torch.randint(0, 2, (), generator=generator))],
    )


class TestBudgetSoundnessSweep:
    """Random attack configurations never leave the per-pixel budget."""

    @pytest.mark.parametrize("case", range(40))
    def test_pixel_ag_within_masked_budget(self, cnn, batch, labels, case):
        """|x_adv - x| <= eps * m_i for every coordinate, whatever the configuration."""
        generator = torch.Generator().manual_seed(500 + case)
        spec = random_attack_spec(generator)
        mask = cam_mask(cnn, batch, labels, spec.eps, spec.eps_low)
        result = pixel_ag(cnn, LossFn(), batch, labels, spec, mask, seed=case)
        assert result.budget_violation(batch) <= 1e-12
        assert float(result.adversarial.min()) >= 0 and float(result.adversarial.max()) <= 1

    @pytest.mark.parametrize("case", range(10))
    def test_pgd_within_eps(self, cnn, batch, labels, case):
        """Plain PGD keeps every coordinate inside the eps box."""
        spec = random_attack_spec(torch.Generator().manual_seed(900 + case))
        result = pgd(cnn, LossFn(), batch, labels, spec, seed=case)
        assert float(result.perturbation.linf().max()) <= spec.eps + 1e-12


def linear_two_class(seed):
    spec = ArchitectureSpec(kind="linear", in_channels=1, height=4, width=4, widths=(), cam_layer="")
    return build_model(spec, seed=seed, dtype=torch.float64)


class TestLossAscent:
    """On a linear two-class model every signed step raises the loss."""

    @pytest.mark.parametrize("seed", range(5))
    def test_pgd_loss_never_decreases(self, seed):
        """Each row of the PGD loss trajectory is non-decreasing."""
        model = linear_two_class(seed)
        images = torch.rand((6, 1, 4, 4), generator=torch.Generator().manual_seed(seed))
        labels = torch.tensor([0, 1, 0, 1, 0, 1])
        spec = AttackSpec(alpha=ALPHA, iterations=10)
        result = pgd(model, LossFn(), images, labels, spec, seed=seed)
        steps = result.loss_trajectory.diff(dim=0)
        assert bool((steps >= -1e-12).all())
        assert bool((result.loss_trajectory[-1] > result.loss_trajectory[0]).all())

    @pytest.mark.parametrize("mode", list(ProjectionMode))
    def test_pixel_ag_loss_never_decreases(self, mode):
        """The reweighted attack ascends too, in either projection mode."""
        model = linear_two_class(7)
        generator = torch.Generator().manual_seed(7)
        images = torch.rand((6, 1, 4, 4), generator=generator)
        labels = torch.tensor([1, 0, 1, 0, 1, 0])
        mask = generate_mask(2 * torch.rand((4, 4), generator=generator), EPS, EPS_LOW)
        spec = AttackSpec(alpha=ALPHA, iterations=10, random_start=False, projection_mode=mode)
        result = pixel_ag(model, LossFn(), images, labels, spec, mask)
        assert bool((result.loss_trajectory.diff(dim=0) >= -1e-12).all())



class TestSanityOnTrainedModel:
    """The checklist on a model trained with the reweighted objective."""

    def test_checklist_on_part_model(self, tiny_data, tiny_spec, cnn, one_conv):
        """All five checks run and report accuracies no higher than the natural one."""
        state = train(tiny_data, tiny_spec, cnn)
        assert state.cache.refresh_epochs == [1]
        sample = tiny_data.subset(8)
        config = SanityConfig(
            iterations=3, unbounded_iterations=5, sweep_iterations=3, random_draws=4, seed=1
        )
        report = sanity_suite(state.model, sample.images, sample.labels, surrogate=one_conv, config=config)

        natural = float((state.model(sample.images).argmax(dim=1) == sample.labels).double().mean())
        assert [item.passed is None for item in report.items] == [False] * 5
        for name in ("one_step_vs_iterative", "transfer", "increasing_eps"):
            assert all(0.0 <= value <= natural for value in report.item(name).values.values())
        assert report.item("unbounded").values["robust_accuracy"] <= natural
        assert report.item("random_sampling").values["survivors"] <= 8
