"""Exact computation in the groups F_r/[N,N] via the Magnus embedding and
edge flows, with random-walk return-probability machinery on top."""

from .words import ReducedWord, commutator, empty_word, generator_word, parse_word, random_word, reduce_letters
from .groups import (
    AbelianGroup,
    BaumslagSolitar,
    Hom,
    Lamplighter,
    MarkedGroup,
    WordHom,
    WreathProduct,
    abelianization_hom,
    base_projection_hom,
    coset_membership,
    free_solvable,
    generator_image_hom,
    lamplighter_nontorsion,
    magnus_group,
    make_abelian_group,
    make_bs,
    make_lamplighter,
    make_wreath,
    mod_hom,
    parse_group_spec,
    remark,
    stretch_hom,
    wreath_lift_hom,
)
from .fox import (
    Flow,
    GroupRingElement,
    ModuleVector,
    WreathImage,
    flow_of_word,
    fox_derivative,
    fox_derivatives,
    magnus_embed,
    stretch_flow,
    stretch_word,
    vartheta_project,
    words_equal_mod_NN,
)
from .measures import (
    Distribution,
    IntegerLaw,
    MeasureSpec,
    WalkEstimate,
    convolve,
    convolve_power,
    convolve_sequence,
    iterated_sws,
    lazy_law,
    make_generator_power_measure,
    make_lazy_srw,
    make_phi_lower_measure,
    make_power_law,
    mc_return_probability,
    pushforward,
    return_probability_exact,
    spec_distribution,
    sws,
    uniform_on_words,
    uniform_pm_one,
    weak_moment,
)
from .exclusive import CheckReport, ExclusiveCandidate, check_exclusive, make_Hm, tm_criterion, translate_rank
from .profiles import (
    FolnerCouple,
    ProfileSpec,
    VolumeFunction,
    ball_vertices,
    box_vertices,
    combined_alpha,
    delta_regular_check,
    dirichlet_lambda1,
    folner_zd,
    gamma_from_volume,
    gamma_log,
    iterated_exp_volume,
    iterated_log,
    mobius,
    phi_profile,
    polynomial_volume,
    stretched_exp_volume,
    witt_degree,
    wreath_volume,
)

__version__ = "0.1.0"
