"""f-divergence softmax operators, sigmoids and Fenchel-Young losses.

The f-softargmax of logits ``theta`` under a reference measure ``q`` is
found by bisection on a one-dimensional dual root equation; gradients come
from Danskin's theorem and implicit differentiation of that root.
"""
from .generators import (
    Divergence,
    DomainError,
    Generator,
    GeneratorKind,
    ReferenceMeasure,
    all_generators,
    divergence,
    eval_conjugate,
    eval_conjugate_prime,
    lambert_w0,
    make_generator,
    negentropy,
    reverse,
    scaled,
    shifted,
)
from .solver import Bracket, SolverConfig, StopMode, bisect, bracket, residual
from .operators import (
    BatchResult,
    KinkWarning,
    OperatorResult,
    batch_softargmax,
    f_softargmax,
    f_softmax,
    grad_softmax_q,
    grad_softmax_theta,
    softargmax_vjp,
    temperature_softargmax,
    temperature_softmax,
)
from .loss import LossResult, fy_loss, fy_loss_batch, fy_loss_grad_q, fy_loss_grad_theta
from .binary import (
    BinaryPrior,
    bradley_terry_prob,
    f_sigmoid_generic,
    f_softplus_generic,
    hellinger_sigmoid,
    js_sigmoid,
    js_softplus,
    kl_sigmoid,
    kl_softplus,
    rkl_sigmoid,
    rkl_softplus,
)
from .kernels import BACKEND

__version__ = "0.1.0"
