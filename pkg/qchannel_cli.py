#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
量子信道分析命令行工具
读取 JSON 信道描述，完成谱分析、熵、压力、模拟、扰动以及具名示例的批量计算

退出码：0 成功，1 出错，2 计算完成但判定结果不确定
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from channel_errors import ChannelError, ConvergenceError, NotNormalizableError, NotPositiveError, UndeterminedVerdictError
from channel_examples import EXAMPLES, rows_frame, run_example
from channel_spec import (
    family_from_spec,
    hamiltonian_from_spec,
    load_spec,
    result_path,
    save_spec,
    spec_from_family,
    spec_summary,
    write_result,
)
from generic import PhiErgKind, family_distance, irreducible_perturbation, phi_erg_classify
from linalg_core import hs_norm
from logging_config import configure_logging, get_logger
from measure import family_summary
from quantum_channel import Channel, Verdict, irreducibility_report, matrix_to_lists
from thermo import (
    entropy,
    gibbs_condition_check,
    gibbs_maximizer,
    potential_data,
    pressure,
    pressure_functional,
    transition_kernel,
)
from trajectory import EmpiricalMeasure, TrajectoryConfig, invariant_measure_pushforward, simulate, write_trajectory_csv

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNDETERMINED = 2


def _header(title: str) -> None:
    print(title)
    print("=" * 50)


def _parse_floats(text: str) -> List[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _parse_vector(text: str) -> np.ndarray:
    """逗号分隔的复数，例如 1,0 或 0.6,0.8j"""
    return np.array([complex(part.strip()) for part in text.split(",") if part.strip()], dtype=np.complex128)


def _sibling(spec_path: str, suffix: str, explicit: Optional[str]) -> Path:
    if explicit:
        return Path(explicit)
    path = Path(spec_path)
    return path.with_name(path.stem + suffix)


def _spectral_section(channel: Channel) -> Dict[str, Any]:
    try:
        return channel.spectral_data().to_dict()
    except (NotPositiveError, ConvergenceError) as error:
        print(f"⚠️ 谱数据计算失败: {error}")
        return {"error": str(error)}


# ---------------------------------------------------------------------------
# 子命令
# ---------------------------------------------------------------------------

def cmd_analyze(spec_path: str) -> int:
    """谱数据、随机性残差、不可约性、Φ-Erg 分类与归一化"""
    _header("📊 信道分析")
    spec = load_spec(spec_path)
    source, declared = spec_summary(spec)
    family = family_from_spec(spec)
    channel = Channel(family)
    print(f"📄 测度来源 {source}，维度 k = {family.dim}，原子数 {family.size}，测度质量 {family.mass:.12g}")

    stochastic = channel.is_stochastic()
    print(f"{'✅' if stochastic else '⚠️'} 随机性残差 ‖φ*(Id) − Id‖ = {stochastic.residual:.3e}")

    spectral = _spectral_section(channel)
    if "lambda" in spectral:
        print(f"🔍 λ = {spectral['lambda']:.12g}，简单: {'是' if spectral['simple'] else '否'}，谱隙 {spectral['gap']:.3e}")

    report = irreducibility_report(channel)
    classification = phi_erg_classify(family)
    print(f"🧩 不可约性: {report.verdict.value}")
    print(f"🧩 Φ-Erg 分类: {classification.kind.value}")

    normalization: Dict[str, Any]
    try:
        normalized = channel.normalize()
        check = normalized.is_stochastic()
        normalization = {
            "lambda": normalized.spectral_data().lam,
            "stochastic_residual": check.residual,
            "operators": [matrix_to_lists(op) for op in normalized.operators],
        }
        print(f"✅ 归一化后 λ = {normalization['lambda']:.12g}，残差 {check.residual:.3e}")
    except (NotNormalizableError, NotPositiveError, ConvergenceError) as error:
        normalization = {"error": str(error)}
        print(f"⚠️ 无法归一化: {error}")

    payload = {
        "command": "analyze",
        "source": {"measure": source, "declared_atoms": declared},
        "family": family_summary(family),
        "stochastic": stochastic.to_dict(),
        "spectral": spectral,
        "irreducibility": report.to_dict(),
        "phi_erg": classification.to_dict(),
        "normalization": normalization,
    }
    output = write_result(result_path(spec_path), payload)
    print(f"💾 结果已写入 {output}")

    undetermined = report.verdict == Verdict.UNDETERMINED or classification.kind == PhiErgKind.UNDETERMINED
    return EXIT_UNDETERMINED if undetermined else EXIT_OK


def cmd_entropy(spec_path: str, log2: bool = False, normalize: bool = False) -> int:
    """熵 h_μ(L)、转移核摘要与测度质量"""
    _header("🔥 信道熵")
    spec = load_spec(spec_path)
    family = family_from_spec(spec)
    channel = Channel(family)
    if normalize and not channel.is_stochastic():
        print("🔄 信道不是随机的，先做归一化")
        channel = channel.normalize()

    h = entropy(channel)
    kernel = transition_kernel(channel)
    unit = "bit" if log2 else "nat"
    value = h / np.log(2.0) if log2 else h
    print(f"📄 测度质量: {family.mass:.12g}")
    print(f"✅ h_μ(L) = {value:.9f} {unit}")
    print(pd.Series(kernel.summary()).to_string())

    payload = {
        "command": "entropy",
        "entropy": value,
        "unit": unit,
        "measure_mass": family.mass,
        "kernel": kernel.summary(),
        "normalized": bool(normalize),
    }
    output = write_result(result_path(spec_path), payload)
    print(f"💾 结果已写入 {output}")
    return EXIT_OK


def cmd_pressure(spec_path: str, special_atom: Optional[int] = None, output: Optional[str] = None) -> int:
    """log λ_H、势函数表、Gibbs 最大化信道及其检查"""
    _header("⚖️ 压力与 Gibbs 信道")
    spec = load_spec(spec_path)
    if spec.hamiltonian is None:
        print("❌ 信道描述中缺少 hamiltonian 部分")
        return EXIT_ERROR
    family = family_from_spec(spec)
    H = hamiltonian_from_spec(spec, family.measure)

    data = potential_data(H)
    log_lam = pressure(H)
    print(f"✅ P(H) = log λ_H = {log_lam:.12g}")
    table = pd.DataFrame({"weight": data.weights, "U_H": data.potential, "q": data.gibbs_weights})
    print(table.to_string())

    maximizer = gibbs_maximizer(H, special_atom)
    check = gibbs_condition_check(maximizer, H)
    value = pressure_functional(maximizer, H, data)
    print(f"{'✅' if check else '❌'} Gibbs 条件偏差 {check.deviation:.3e}（容差 {check.tol:.0e}）")
    print(f"📊 h + ∫U dν = {value:.12g}，与 log λ_H 相差 {abs(value - log_lam):.3e}")

    maximizer_path = _sibling(spec_path, ".gibbs.json", output)
    save_spec(spec_from_family(maximizer), maximizer_path)
    print(f"💾 Gibbs 信道已写入 {maximizer_path}")

    payload: Dict[str, Any] = {
        "command": "pressure",
        "log_lambda": log_lam,
        "potential": data.to_dict(),
        "gibbs_check": check.to_dict(),
        "maximizer_pressure_functional": value,
        "maximizer_spec": str(maximizer_path),
    }
    if family.measure.same_atoms(H.measure) and Channel(family).is_stochastic():
        payload["spec_pressure_functional"] = pressure_functional(family, H, data)
    write_result(result_path(spec_path), payload)
    return EXIT_OK if check else EXIT_ERROR


def cmd_simulate(
    spec_path: str,
    steps: int,
    burn_in: int = 0,
    chains: int = 1,
    seed: int = 0,
    x0: Optional[str] = None,
    csv: Optional[str] = None,
) -> int:
    """蒙特卡罗模拟 Π_L，输出经验测度、重心及其到 ρ_L 的距离"""
    _header("🎲 射影马尔可夫链模拟")
    spec = load_spec(spec_path)
    channel = Channel(family_from_spec(spec))
    start = np.eye(channel.dim, dtype=np.complex128)[0] if x0 is None else _parse_vector(x0)
    if start.shape != (channel.dim,):
        print(f"❌ 初始向量长度 {start.shape[0]} 与维度 {channel.dim} 不一致")
        return EXIT_ERROR

    config = TrajectoryConfig(n_steps=steps, burn_in=burn_in, n_chains=chains, seed=seed)
    result = simulate(channel, start, config)
    center = result.barycenter
    print(f"📄 样本数 {result.diagnostics['samples']}，支撑点数 {result.empirical.size}")

    distance = None
    try:
        distance = hs_norm(center - channel.spectral_data().rho)
        print(f"📊 ‖重心 − ρ_L‖ = {distance:.3e}")
    except (NotPositiveError, ConvergenceError) as error:
        print(f"⚠️ 无法计算 ρ_L: {error}")

    exact = invariant_measure_pushforward(channel, EmpiricalMeasure.dirac(start), max_iter=200)
    if exact is not None:
        print(f"✅ 精确推前收敛，支撑点数 {exact.size}")

    if csv:
        write_trajectory_csv(result, csv)
        print(f"💾 轨迹已写入 {csv}")

    payload = {
        "command": "simulate",
        **result.to_dict(),
        "barycenter": matrix_to_lists(center),
        "distance_to_rho": distance,
        "exact_invariant_measure": None if exact is None else exact.to_dict(),
    }
    output = write_result(result_path(spec_path), payload)
    print(f"💾 结果已写入 {output}")
    return EXIT_OK


def cmd_perturb(spec_path: str, epsilon: float, output: Optional[str] = None, seed: int = 0) -> int:
    """扰动成不可约族，输出扰动前后的分类"""
    _header("🔧 恢复不可约性的扰动")
    spec = load_spec(spec_path)
    family = family_from_spec(spec)
    before = phi_erg_classify(family, seed=seed)
    print(f"📄 扰动前: {before.kind.value}")

    try:
        perturbed = irreducible_perturbation(family, epsilon, seed=seed)
    except UndeterminedVerdictError as error:
        print(f"⚠️ {error}")
        write_result(result_path(spec_path), {"command": "perturb", "before": before.to_dict(), "error": str(error)})
        return EXIT_UNDETERMINED

    after = phi_erg_classify(perturbed, seed=seed)
    distance = family_distance(family, perturbed)
    print(f"✅ 扰动后: {after.kind.value}，max‖K' − K‖ = {distance:.3e}（ε = {epsilon:.1e}）")

    perturbed_path = _sibling(spec_path, ".perturbed.json", output)
    save_spec(spec_from_family(perturbed), perturbed_path)
    print(f"💾 扰动后的信道已写入 {perturbed_path}")

    payload = {
        "command": "perturb",
        "epsilon": epsilon,
        "before": before.to_dict(),
        "after": after.to_dict(),
        "distance": distance,
        "perturbed_spec": str(perturbed_path),
    }
    write_result(result_path(spec_path), payload)
    return EXIT_OK if after.kind == PhiErgKind.IRREDUCIBLE else EXIT_UNDETERMINED


def cmd_examples(name: str, params: Dict[str, Any], output: Optional[str] = None) -> int:
    """运行具名示例并打印期望值与计算值对照表"""
    _header(f"📚 示例: {name}")
    rows = run_example(name, **params)
    frame = rows_frame(rows)
    print(frame.to_string(index=False))

    failed = [row.quantity for row in rows if row.ok is False]
    if output:
        write_result(output, {"command": "examples", "name": name, "rows": [row.to_dict() for row in rows]})
        print(f"💾 结果已写入 {output}")
    if failed:
        print(f"❌ 不符合期望: {', '.join(failed)}")
        return EXIT_ERROR
    print("✅ 全部检查通过")
    return EXIT_OK


# ---------------------------------------------------------------------------
# 入口
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="量子信道分析工具")
    parser.add_argument("--log-level", default=None, help="日志级别 (默认取 QCHAN_LOG_LEVEL)")
    parser.add_argument("--json-logs", action="store_true", help="日志输出为 JSON")
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="谱分析与分类")
    analyze.add_argument("spec", help="信道描述文件")

    ent = sub.add_parser("entropy", help="信道熵")
    ent.add_argument("spec")
    ent.add_argument("--log2", action="store_true", help="以 bit 为单位")
    ent.add_argument("--normalize", action="store_true", help="非随机信道先归一化")

    pres = sub.add_parser("pressure", help="压力与 Gibbs 信道")
    pres.add_argument("spec")
    pres.add_argument("--special-atom", type=int, default=None, help="Gibbs 信道中取 Q 的原子")
    pres.add_argument("--output", default=None, help="Gibbs 信道的输出路径")

    sim = sub.add_parser("simulate", help="蒙特卡罗模拟")
    sim.add_argument("spec")
    sim.add_argument("--steps", type=int, default=10000)
    sim.add_argument("--burn-in", type=int, default=0)
    sim.add_argument("--chains", type=int, default=1)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--x0", default=None, help="初始向量，逗号分隔 (默认 e₁)")
    sim.add_argument("--csv", default=None, help="轨迹 CSV 输出路径")

    pert = sub.add_parser("perturb", help="恢复不可约性的扰动")
    pert.add_argument("spec")
    pert.add_argument("--epsilon", type=float, default=1e-3)
    pert.add_argument("--seed", type=int, default=0)
    pert.add_argument("--output", default=None, help="扰动后信道的输出路径")

    ex = sub.add_parser("examples", help="具名示例")
    ex.add_argument("name", choices=sorted(EXAMPLES))
    ex.add_argument("--p", default=None, help="马尔可夫示例的 P，行优先逗号分隔")
    ex.add_argument("--mass-tol", type=float, default=None)
    ex.add_argument("--n-r", type=int, default=None)
    ex.add_argument("--n-theta", type=int, default=None)
    ex.add_argument("--seed", type=int, default=None)
    ex.add_argument("--output", default=None, help="对照表 JSON 输出路径")
    return parser


def _example_params(args: argparse.Namespace) -> Dict[str, Any]:
    params: Dict[str, Any] = {}
    if args.name == "markov" and args.p:
        params["p"] = _parse_floats(args.p)
    if args.name == "shift" and args.mass_tol is not None:
        params["mass_tol"] = args.mass_tol
    if args.name == "gaussian":
        if args.n_r is not None:
            params["n_r"] = args.n_r
        if args.n_theta is not None:
            params["n_theta"] = args.n_theta
    if args.name in ("four-proj", "shift") and args.seed is not None:
        params["seed"] = args.seed
    return params


def main(argv: Optional[List[str]] = None) -> int:
    """主函数"""
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level, True if args.json_logs else None)

    try:
        if args.command == "analyze":
            return cmd_analyze(args.spec)
        if args.command == "entropy":
            return cmd_entropy(args.spec, log2=args.log2, normalize=args.normalize)
        if args.command == "pressure":
            return cmd_pressure(args.spec, args.special_atom, args.output)
        if args.command == "simulate":
            return cmd_simulate(args.spec, args.steps, args.burn_in, args.chains, args.seed, args.x0, args.csv)
        if args.command == "perturb":
            return cmd_perturb(args.spec, args.epsilon, args.output, args.seed)
        return cmd_examples(args.name, _example_params(args), args.output)

    except KeyboardInterrupt:
        print("\n👋 操作被用户中断")
        return EXIT_ERROR
    except UndeterminedVerdictError as e:
        print(f"⚠️ 判定不确定: {e}")
        return EXIT_UNDETERMINED
    except (ChannelError, ValueError, FileNotFoundError) as e:
        logger.error("command_failed", command=args.command, error=str(e))
        print(f"❌ 执行失败: {e}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
