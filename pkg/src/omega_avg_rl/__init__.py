"""Average-reward RL for omega-regular objectives via reward machines."""

__version__ = "0.1.0"

from .automata import (BuchiAutomaton, SpecClass, classify_specification,
                       coaccessible_states, det_language_containment,
                       parse_automaton)
from .machines import (LexicographicRewardMachine, ResetRewardMachine,
                       build_lexicographic_machine, build_reset_machine,
                       machine_step, schedule_beta)
from .mdp import (MarkovChain, Mdp, MecDecomposition, StationaryPolicy,
                  induce_chain, is_communicating, is_weakly_communicating,
                  mec_decomposition, sample_transition, validate_mdp)
from .product import (ExplicitProduct, ProductEnv, StepOutcome,
                      build_explicit_product, product_actions, product_step)
from .learners import (LearnerConfig, QTable, TrainResult,
                       bozkurt_reduction_env, differential_q_train,
                       discounted_q_train, greedy_policy, hahn_reduction_env)
from .verify import (ProductPolicy, VerificationResult,
                     beta_limit_external_gain, max_reach_probability,
                     optimal_satisfaction_probability, policy_average_reward,
                     policy_satisfaction_probability)

__all__ = [name for name in dir() if not name.startswith("_")]
