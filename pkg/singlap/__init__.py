"""
singlap：用线性探测函数上的图拉普拉斯检测点云中的奇异点（流形交集与边界）
"""
from .errors import (ConvergenceError, DomainError, EstimationError, PreconditionError, SinglapError,
                     UnsupportedDimensionError)
from .estimators import EstimateReport, estimate, estimate_angle, estimate_crossing, profile_fit_diagnostics
from .hyptest import (TestConfig, TestReport, bandwidth_for_test, power_conditions_check, power_lower_bound,
                      required_sample_size, run_concentration_experiment, run_experiment_table, run_test,
                      threshold_delta)
from .laplacian import (KernelParams, LaplacianResponse, ProbeDirection, expected_laplacian_flat,
                        expected_laplacian_oracle, graph_laplacian_apply, graph_laplacian_apply_many,
                        noise_expectation, noisy_laplacian_apply, select_direction)
from .manifold_gen import (ManifoldPiece, PointCloud, ProbeCurve, Scene, add_noise, make_boundary_scene,
                           make_intersection_scene, make_plane_scene, make_probe_curve, sample_uniform)
from .special_functions import gamma_lower, gamma_upper, lambert_w0, lambert_wm1
from .theory import (LocalGeometry, PredictionEnvelope, check_hypotheses, predict_flat_boundary,
                     predict_flat_interior, predict_general)
from .zeroset import Box, Interval, Paving, SphericalNet, centroids, contract, interval_eval_net, pave

__version__ = "1.0.0"
