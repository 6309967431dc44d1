"""
命令行入口

    python -m singlap gen --scene intersection --theta 0.785 --n-total 20000 --out-dir out/
    python -m singlap test --cloud out/cloud.csv
    python -m singlap power-sweep --trials 10
    python -m singlap zeroset --k 1 --root-half-width 2 --width-cap 0.05
    python -m singlap concentration --n 10000 --trials 100
    python -m singlap --manifest out/gen.manifest.json --out-dir again/

退出码：0 正常（test 未拒绝 H0）；1 test 拒绝 H0；2 前置条件/定义域错误（stderr 输出 JSON）
"""
import argparse
import math
import os
import sys
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from dotenv import load_dotenv

from .config import ESTIMATE_CFG, HYPTEST_CFG, NOISE_CFG, RUN_CFG, ZEROSET_CFG, refresh_from_env
from .errors import PreconditionError, SinglapError, require
from .estimators import estimate, profile_fit_diagnostics, response_along_curve, run_estimator_experiment
from .hyptest import TestConfig, bandwidth_for_test, run_concentration_experiment, run_experiment_table, run_test
from .io_utils import RunManifest, banner, dumps_json, echo, set_verbose, write_csv, write_json
from .laplacian import ProbeDirection, expected_laplacian_oracle, noise_check, response_at, select_direction
from .manifold_gen import (add_noise, load_cloud, make_boundary_scene, make_intersection_scene,
                           make_plane_scene, make_probe_curve, sample_uniform, save_cloud)
from .pca import fit_pca, projection_frame
from .zeroset import Box, centroid_residuals, centroids, make_target_net, pave

EXIT_OK, EXIT_REJECT, EXIT_ERROR = 0, 1, 2


def _floats(text: str) -> List[float]:
    return [float(s) for s in text.split(",") if s.strip()]


def _ints(text: str) -> List[int]:
    return [int(float(s)) for s in text.split(",") if s.strip()]


def _emit_table(df: pd.DataFrame, out_dir: str, stem: str, fmt: str) -> str:
    if fmt == "json":
        return write_json(df.to_dict(orient="list"), os.path.join(out_dir, f"{stem}.json"))
    return write_csv(df, os.path.join(out_dir, f"{stem}.csv"))


def _direction(args, N: int) -> ProbeDirection:
    if args.v:
        v = _floats(args.v)
        require(len(v) == N, f"v 的维数 {len(v)} 与环境维数 {N} 不一致")
        return ProbeDirection.normalized(v)
    return ProbeDirection.random(N, np.random.default_rng(np.random.SeedSequence([args.seed, 1])))


def _load(path: str):
    cloud, scene = load_cloud(path)
    echo(f"读取点云 {path}：n={cloud.n}，N={cloud.N}", "ok")
    return cloud, scene


# ---- 子命令 ----

def cmd_gen(args, manifest: RunManifest) -> int:
    if args.scene == "intersection":
        scene = make_intersection_scene(args.N, args.d, args.theta, args.kind, args.L, args.extent,
                                        args.profile, args.ambient_cube)
    elif args.scene == "plane":
        scene = make_plane_scene(args.N, args.d, args.extent)
    else:
        scene = make_boundary_scene(args.N, args.d, args.extent)
    if args.n_total:
        cloud = sample_uniform(scene, seed=args.seed, n_total=args.n_total)
    else:
        cloud = sample_uniform(scene, args.n_per_piece, seed=args.seed)
    if args.sigma > 0.0:
        cloud = add_noise(cloud, args.sigma, seed=args.seed + 1)
    manifest.scene_hash = scene.scene_hash()
    for path in save_cloud(cloud, os.path.join(args.out_dir, "cloud.csv"), scene):
        manifest.add_output(path)
    banner("点云生成", {"场景": args.scene, "n": cloud.n, "N": cloud.N, "scene_hash": manifest.scene_hash[:12]})
    return EXIT_OK


def cmd_laplacian(args, manifest: RunManifest) -> int:
    cloud, scene = _load(args.cloud)
    v = _direction(args, cloud.N)
    meta: Dict[str, Any] = {"seed": args.seed, "scene_hash": cloud.meta.get("scene_hash")}
    if args.eval:
        ev_cloud, _ = load_cloud(args.eval)
        eval_points = ev_cloud.points
    else:
        if scene is None:
            raise PreconditionError("点云没有场景侧车，必须用 --eval 给出评估点")
        curve = make_probe_curve(scene, args.piece, scene.x0, args.m, args.half_length,
                                 require_crossing=False)
        eval_points = curve.points
        meta["crossing_arc"] = curve.crossing_arc
    response = response_at(cloud, eval_points, v, args.t, meta, args.threads)
    if args.oracle:
        if scene is None:
            raise PreconditionError("--oracle 需要场景侧车")
        oracle = [sum(expected_laplacian_oracle(scene, i, x, v.v, args.t).value
                      for i in range(len(scene.pieces))) for x in eval_points]
        df = response.to_frame()
        df["expected"] = np.asarray(oracle) * (cloud.n - 1) / cloud.n
        manifest.add_output(_emit_table(df, args.out_dir, "response", args.format))
        manifest.add_output(write_json({**response.meta, "t": args.t, "v": v.v.tolist()},
                                       os.path.join(args.out_dir, "response.meta.json")))
    else:
        for path in response.save(os.path.join(args.out_dir, "response.csv")):
            manifest.add_output(path)
    manifest.scene_hash = cloud.meta.get("scene_hash")
    banner("图拉普拉斯响应", {"评估点": response.m, "t": args.t,
                              "max|L f|": float(np.max(np.abs(response.values)))})
    return EXIT_OK


def cmd_test(args, manifest: RunManifest) -> int:
    cloud, scene = _load(args.cloud)
    x0 = np.asarray(_floats(args.x0)) if args.x0 else (scene.x0 if scene is not None else None)
    config = TestConfig(args.alpha, x0, args.radius, args.t)
    rng = np.random.default_rng(np.random.SeedSequence([args.seed, 2]))
    if args.v:
        v = _direction(args, cloud.N)
        test_cloud = cloud
    elif args.select_cloud:
        sel, _ = load_cloud(args.select_cloud)
        test_cloud = cloud
        v = _select(sel.points, test_cloud.n, config, args, rng)
    else:
        # 随机划分出与检验样本不相交的选方向子样本
        perm = rng.permutation(cloud.n)
        n_sel = max(1, int(math.ceil(HYPTEST_CFG["select_fraction"] * cloud.n)))
        sel_points = cloud.points[perm[:n_sel]]
        test_cloud = cloud.subset(np.sort(perm[n_sel:]))
        v = _select(sel_points, test_cloud.n, config, args, rng)
    report = run_test(test_cloud, config, v, independent_selection=True, threads=args.threads)
    manifest.scene_hash = cloud.meta.get("scene_hash")
    manifest.add_output(write_json(report.to_dict(), os.path.join(args.out_dir, "test_report.json")))
    banner("假设检验", {"T": report.T, "δ": report.delta, "t": report.t_used,
                        "n": report.n, "拒绝 H0": report.reject})
    return EXIT_REJECT if report.reject else EXIT_OK


def _select(sel_points: np.ndarray, n_test: int, config: TestConfig, args, rng) -> ProbeDirection:
    t = config.t_override if config.t_override is not None else bandwidth_for_test(n_test, config.alpha)
    x0 = config.x0 if config.x0 is not None else np.zeros(sel_points.shape[1])
    ball = sel_points[np.linalg.norm(sel_points - x0[None, :], axis=1) <= config.radius]
    seed = int(rng.integers(0, 2 ** 63 - 1))
    return select_direction(sel_points, ball, t, args.n_candidates, seed=seed)


def cmd_power_sweep(args, manifest: RunManifest) -> int:
    table, log = run_experiment_table(_ints(args.sizes), _floats(args.angles), args.trials,
                                      args.seed, args.threads, args.alpha)
    manifest.add_output(_emit_table(table, args.out_dir, "power_table", args.format))
    manifest.add_output(_emit_table(log, args.out_dir, "power_log", args.format))
    if RUN_CFG["verbose"]:
        echo(table.to_string(index=False), "info")
    return EXIT_OK


def cmd_concentration(args, manifest: RunManifest) -> int:
    table, log = run_concentration_experiment(args.n, args.trials, _floats(args.levels), args.seed,
                                              args.threads, args.alpha, args.t)
    manifest.add_output(_emit_table(table, args.out_dir, "concentration", args.format))
    manifest.add_output(_emit_table(log, args.out_dir, "concentration_log", args.format))
    if RUN_CFG["verbose"]:
        echo(table.to_string(index=False), "info")
    return EXIT_OK


def cmd_estimate(args, manifest: RunManifest) -> int:
    if args.cloud:
        cloud, scene = _load(args.cloud)
        if scene is None:
            raise PreconditionError("估计需要场景侧车以构造探测曲线")
        curve = make_probe_curve(scene, args.piece, scene.x0, args.m, args.half_length)
        v = _direction(args, cloud.N)
        response = response_along_curve(cloud, curve, v, args.t, args.threads)
        report = estimate(response, args.t, refine=args.refine)
        out = report.to_dict()
        out["fit"] = profile_fit_diagnostics(response, math.sqrt(args.t))
        if curve.crossing_point is not None:
            out["s_error"] = float(np.linalg.norm(report.s_hat - curve.crossing_point))
        manifest.scene_hash = cloud.meta.get("scene_hash")
        manifest.add_output(write_json(out, os.path.join(args.out_dir, "estimate.json")))
        banner("交点与交角估计", {"ŝ": np.round(report.s_hat, 6).tolist(), "θ̂": report.theta_hat,
                                  "r̂": report.r_max_hat})
        return EXIT_OK
    frames = [run_estimator_experiment(theta, args.runs, args.seed, args.kind, args.L, args.t,
                                       args.n_per_piece, args.m, args.threads)
              for theta in _floats(args.angles)]
    runs = pd.concat(frames, ignore_index=True)
    summary = (runs.groupby("theta", sort=True)
               .agg(median_theta_error=("theta_error", "median"), median_s_error=("s_error", "median"),
                    clipped=("clipped", "sum"), failed=("failed", "sum"))
               .reset_index())
    manifest.add_output(_emit_table(runs, args.out_dir, "estimate_runs", args.format))
    manifest.add_output(_emit_table(summary, args.out_dir, "estimate_summary", args.format))
    if RUN_CFG["verbose"]:
        echo(summary.to_string(index=False), "info")
    return EXIT_OK


def cmd_noise_check(args, manifest: RunManifest) -> int:
    if args.cloud:
        cloud, _ = _load(args.cloud)
    else:
        scene = make_plane_scene(args.N, args.N - 1, 1.0)
        cloud = sample_uniform(scene, seed=args.seed, n_total=args.n)
    rng = np.random.default_rng(np.random.SeedSequence([args.seed, 3]))
    eval_points = rng.normal(scale=0.5, size=(args.points, cloud.N))
    v = _direction(args, cloud.N)
    report = noise_check(cloud, eval_points, v.v, args.t, args.sigma, args.draws,
                         seed=int(rng.integers(0, 2 ** 63 - 1)))
    out = report.to_dict()
    out.update({"t": args.t, "sigma": args.sigma, "v": v.v.tolist(), "eval_points": eval_points.tolist()})
    manifest.add_output(write_json(out, os.path.join(args.out_dir, "noise_check.json")))
    banner("噪声期望常数", {"选中": report.selected,
                            **{f"max|z| {k}": z for k, z in out["max_abs_z"].items()}})
    if report.selected is None:
        echo("两个候选常数都没有被明确选出", "warn")
    return EXIT_OK


def cmd_zeroset(args, manifest: RunManifest) -> int:
    delta = ZEROSET_CFG["delta_machine"] if args.delta == "machine" else float(args.delta)
    net = make_target_net(args.k, args.n_inputs)
    root = Box.cube(net.dim, args.root_half_width)
    ckpt = os.path.join(args.out_dir, "zeroset.checkpoint.json") if (args.checkpoint or args.resume) else None
    paving = pave(net, delta, args.width_cap, args.budget, root, ckpt, resume=args.resume)
    for path in paving.save(os.path.join(args.out_dir, "paving.csv")):
        manifest.add_output(path)
    if ckpt:
        manifest.add_output(ckpt)
    rows = dict(paving.summary())
    if paving.n_accepted:
        cloud = centroids(paving)
        for path in save_cloud(cloud, os.path.join(args.out_dir, "centroids.csv")):
            manifest.add_output(path)
        resid, allowed = centroid_residuals(paving, net)
        rows["中心残差满足"] = bool(np.all(resid <= allowed))
    banner("零点集铺砌", rows)
    return EXIT_OK


def cmd_pca(args, manifest: RunManifest) -> int:
    cloud, _ = _load(args.cloud)
    model = fit_pca(cloud.points, args.dim)
    manifest.add_output(_emit_table(projection_frame(model, cloud.points), args.out_dir, "pca", args.format))
    manifest.add_output(write_json(model.to_dict(), os.path.join(args.out_dir, "pca.model.json")))
    if model.rank < args.dim:
        echo(f"协方差退化：数值秩 {model.rank} < 目标维数 {args.dim}", "warn")
    banner("PCA 投影", {"目标维数": args.dim, "秩": model.rank,
                        "解释方差比": np.round(model.explained_variance_ratio, 6).tolist()})
    return EXIT_OK


COMMANDS = {
    "gen": cmd_gen,
    "laplacian": cmd_laplacian,
    "test": cmd_test,
    "power-sweep": cmd_power_sweep,
    "concentration": cmd_concentration,
    "estimate": cmd_estimate,
    "noise-check": cmd_noise_check,
    "zeroset": cmd_zeroset,
    "pca": cmd_pca,
}


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--seed", type=int, default=0, help="64 位随机种子，按 SeedSequence 派生子流")
    shared.add_argument("--out-dir", default="output", help="输出目录")
    shared.add_argument("--threads", type=int, default=RUN_CFG["threads"], help="线程数")
    shared.add_argument("--format", choices=("csv", "json"), default="csv", help="表格输出格式")
    shared.add_argument("--env-file", default=None, help="显式加载的 .env 文件（不传则不读任何配置文件）")
    shared.add_argument("--quiet", action="store_true", help="只输出错误")

    parser = argparse.ArgumentParser(prog="singlap", description="图拉普拉斯奇异点检测")
    parser.add_argument("--manifest", default=None, metavar="PATH",
                        help="按 <command>.manifest.json 重跑；其后的参数覆盖清单中的同名参数")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[shared], help="在场景上采样点云")
    p.add_argument("--scene", choices=("intersection", "plane", "boundary"), default="intersection",
                   help="intersection：两片交于 x0；plane：H0 单片；boundary：x0 在片的边界面上")
    p.add_argument("--N", type=int, default=3, help="环境维数 N")
    p.add_argument("--d", type=int, default=2, help="内在维数 d（d < N）")
    p.add_argument("--theta", type=float, default=math.pi / 4, help="两片的交角 θ ∈ (0, π/2]")
    p.add_argument("--kind", choices=("flat", "curved"), default="flat",
                   help="flat：平坦片；curved：第二片沿法向按 --profile 弯曲")
    p.add_argument("--L", type=float, default=0.0, help="曲面片的正则常数 L（曲率尺度）")
    p.add_argument("--profile", choices=("quadratic", "sine"), default="quadratic",
                   help="曲面片的法向位移：L|u|² 或 2L(1 − cos u₁)")
    p.add_argument("--extent", type=float, default=1.0, help="坐标盒半宽；plane/boundary 场景的片半宽")
    p.add_argument("--ambient-cube", type=float, default=None, help="把平面裁剪到 [−c, c]^N")
    p.add_argument("--n-per-piece", type=int, default=ESTIMATE_CFG["n_per_piece"],
                   help="每片的样本数（未给 --n-total 时）")
    p.add_argument("--n-total", type=int, default=None, help="在 ∪Ωᵢ 上独立同分布采样的总数 n")
    p.add_argument("--sigma", type=float, default=0.0, help="环境空间各向同性高斯噪声的标准差 σ")

    p = sub.add_parser("laplacian", parents=[shared], help="计算 L_{n,t}f 响应")
    p.add_argument("--cloud", required=True, help="gen 写出的点云 CSV（样本 X₁…X_n）")
    p.add_argument("--eval", default=None, help="评估点 CSV；缺省时沿经过 x0 的探测曲线")
    p.add_argument("--t", type=float, default=ESTIMATE_CFG["t"], help="核带宽 t，K_t(x,y) = exp(−|x−y|²/t)")
    p.add_argument("--v", default=None, help="线性探测函数 f(x) = v·x 的方向，逗号分隔；缺省时随机")
    p.add_argument("--piece", type=int, default=0, help="探测曲线所在片的序号 i")
    p.add_argument("--m", type=int, default=ESTIMATE_CFG["m"], help="探测曲线上的评估点数 m")
    p.add_argument("--half-length", type=float, default=ESTIMATE_CFG["curve_half_length"],
                   help="探测曲线的半弧长（须留在片的坐标盒内）")
    p.add_argument("--oracle", action="store_true", help="同时输出求积 oracle 的 ((n−1)/n)L_t f")

    p = sub.add_parser("test", parents=[shared], help="水平 α 检验 H0：无奇异点")
    p.add_argument("--cloud", required=True, help="检验样本 CSV")
    p.add_argument("--select-cloud", default=None, help="独立的选方向样本；缺省时从 cloud 中划出 20%%")
    p.add_argument("--v", default=None, help="直接给出探测方向 v（此时不再选方向）")
    p.add_argument("--alpha", type=float, default=HYPTEST_CFG["alpha"], help="检验水平 α，决定阈值 δ(n,t,α)")
    p.add_argument("--x0", default=None, help="检验球 B_radius(x0) 的中心，逗号分隔；缺省取场景 x0")
    p.add_argument("--radius", type=float, default=HYPTEST_CFG["radius"], help="检验球半径，T 在球内样本上取最大")
    p.add_argument("--t", type=float, default=None, help="覆盖检验带宽；缺省取 t(n,α)")
    p.add_argument("--n-candidates", type=int, default=HYPTEST_CFG["n_candidates"],
                   help="选方向时在单位球面上比较的候选方向数")

    p = sub.add_parser("power-sweep", parents=[shared], help="拒绝率表（样本量 × 场景）")
    p.add_argument("--sizes", default=",".join(str(n) for n in HYPTEST_CFG["sample_sizes"]),
                   help="样本量 n 的列表，逗号分隔（表的行）")
    p.add_argument("--angles", default=",".join(repr(a) for a in HYPTEST_CFG["angles"]),
                   help="H1 场景的交角 θ 列表，逗号分隔（表的列，另加一列 H0）")
    p.add_argument("--trials", type=int, default=HYPTEST_CFG["trials"], help="每格的重复次数")
    p.add_argument("--alpha", type=float, default=HYPTEST_CFG["alpha"], help="检验水平 α")

    p = sub.add_parser("concentration", parents=[shared], help="在 H0 平面上核对集中不等式")
    p.add_argument("--n", type=int, default=HYPTEST_CFG["concentration_n"], help="每次的样本量 n")
    p.add_argument("--trials", type=int, default=HYPTEST_CFG["trials"], help="重复次数")
    p.add_argument("--levels", default=",".join(repr(a) for a in HYPTEST_CFG["concentration_levels"]),
                   help="界的取值 2n·exp(−4e(n−1)ε²/t)，逗号分隔；每个值反解出一个 ε")
    p.add_argument("--alpha", type=float, default=HYPTEST_CFG["alpha"], help="用于缺省带宽 t(n,α) 的 α")
    p.add_argument("--t", type=float, default=None, help="覆盖带宽；缺省取 t(n,α)")

    p = sub.add_parser("estimate", parents=[shared], help="交点与交角估计")
    p.add_argument("--cloud", default=None, help="给出则对该点云估计一次；否则运行重复实验")
    p.add_argument("--angles", default=",".join(repr(a) for a in ESTIMATE_CFG["angles"]),
                   help="重复实验的交角 θ 列表，逗号分隔")
    p.add_argument("--runs", type=int, default=ESTIMATE_CFG["runs"], help="每个角度的重复次数")
    p.add_argument("--kind", choices=("flat", "curved"), default="flat", help="重复实验的场景类型")
    p.add_argument("--L", type=float, default=0.5, help="curved 场景的正则常数 L")
    p.add_argument("--t", type=float, default=ESTIMATE_CFG["t"], help="核带宽 t；极值位置按 √t 缩放")
    p.add_argument("--n-per-piece", type=int, default=ESTIMATE_CFG["n_per_piece"], help="每片的样本数")
    p.add_argument("--m", type=int, default=ESTIMATE_CFG["m"], help="探测曲线上的评估点数 m")
    p.add_argument("--piece", type=int, default=0, help="探测曲线所在片的序号")
    p.add_argument("--half-length", type=float, default=ESTIMATE_CFG["curve_half_length"],
                   help="探测曲线的半弧长")
    p.add_argument("--v", default=None, help="探测方向 v，逗号分隔；缺省时随机")
    p.add_argument("--refine", action="store_true", help="抛物线插值细化极值位置")

    p = sub.add_parser("noise-check", parents=[shared], help="噪声期望常数的 Monte-Carlo 判定")
    p.add_argument("--cloud", default=None, help="缺省时在 ℝ^N 的超平面上采样 n 个点")
    p.add_argument("--N", type=int, default=3, help="环境维数 N（无 --cloud 时）")
    p.add_argument("--n", type=int, default=200, help="超平面上的样本数 n（无 --cloud 时）")
    p.add_argument("--sigma", type=float, default=0.1, help="高斯噪声标准差 σ")
    p.add_argument("--t", type=float, default=0.5, help="核带宽 t；噪声下的等效带宽为 t + 2σ²")
    p.add_argument("--draws", type=int, default=NOISE_CFG["draws"], help="噪声的 Monte-Carlo 抽样次数")
    p.add_argument("--points", type=int, default=20, help="随机评估点个数")
    p.add_argument("--v", default=None, help="探测方向 v，逗号分隔；缺省时随机")

    p = sub.add_parser("zeroset", parents=[shared], help="球面网络零点集的区间铺砌")
    p.add_argument("--k", type=int, default=3, help="隐层宽度 k，零点集所在空间的维数")
    p.add_argument("--n-inputs", type=int, default=ZEROSET_CFG["n_inputs"], help="球面网络的输入点数")
    p.add_argument("--delta", default=str(ZEROSET_CFG["delta"]),
                   help="容差 δ，接受 |g| ≤ δ 的盒；'machine' 表示机器精度")
    p.add_argument("--width-cap", type=float, default=ZEROSET_CFG["width_cap"], help="接受盒的最大边长")
    p.add_argument("--budget", type=int, default=ZEROSET_CFG["budget"], help="最多处理的盒数")
    p.add_argument("--root-half-width", type=float, default=ZEROSET_CFG["box_half_width"],
                   help="根盒 [−w, w]^k 的半宽 w")
    p.add_argument("--checkpoint", action="store_true", help="定期写检查点")
    p.add_argument("--resume", action="store_true", help="从 out-dir 中的检查点继续")

    p = sub.add_parser("pca", parents=[shared], help="PCA 投影")
    p.add_argument("--cloud", required=True, help="待投影的点云 CSV")
    p.add_argument("--dim", type=int, default=3, help="目标维数")
    return parser


def _replay_argv(path: str, rest: List[str]) -> List[str]:
    """由清单的 params 重建命令行；rest 中的参数排在后面，可覆盖清单中的同名参数（如 --out-dir）"""
    manifest = RunManifest.load(path)
    argv = [manifest.command]
    for key, value in manifest.params.items():
        if value is None or value is False:
            continue
        flag = "--" + key.replace("_", "-")
        argv.append(flag if value is True else f"{flag}={value}")
    return argv + rest


def main(argv: Optional[List[str]] = None) -> int:
    """命令行入口，返回退出码"""
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--env-file", default=None)
    pre.add_argument("--manifest", default=None)
    known, rest = pre.parse_known_args(argv)
    for path in (known.env_file, known.manifest):
        if path and not os.path.exists(path):
            sys.stderr.write(dumps_json({"error": "FileNotFoundError",
                                         "message": f"文件不存在: {path}"}).decode("utf-8") + "\n")
            return EXIT_ERROR
    if known.env_file:
        load_dotenv(known.env_file, override=True)
        refresh_from_env()
    if known.manifest:
        argv = _replay_argv(known.manifest, rest)
    args = build_parser().parse_args(argv)
    set_verbose(os.getenv("SINGLAP_VERBOSE", "1") != "0" and not args.quiet)
    params = {k: v for k, v in vars(args).items()
              if k not in ("command", "env_file", "quiet", "threads", "manifest")}
    manifest = RunManifest(args.command, params, args.seed)
    try:
        code = COMMANDS[args.command](args, manifest)
    except (SinglapError, FileNotFoundError) as exc:
        payload = exc.to_dict() if isinstance(exc, SinglapError) else {
            "error": type(exc).__name__, "message": str(exc)}
        sys.stderr.write(dumps_json(payload).decode("utf-8") + "\n")
        return EXIT_ERROR
    manifest.save(args.out_dir)
    return code


if __name__ == "__main__":
    sys.exit(main())
