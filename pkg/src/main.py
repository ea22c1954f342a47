"""QLA 模擬與資源估計主程序"""

import sys
import logging
import argparse
from typing import List, Optional

import numpy as np
import pandas as pd

from .ecc import calibrated_timing, ecc_latency, recursion_model, feasibility_report, syndrome_stages
from .errors import ConfigError, QlaError
from .interconnect import DEFAULT_SPACINGS, connection_plan, distances_grid, spacing_crossover, spacing_sweep
from .layout import STEANE_LEVEL2, build_layout, layout_summary
from .params import ParameterProfile, profile_table, resolve_profile
from .scheduler import (build_channel_graph, load_workload, run_toffoli, saturating_workload, schedule,
                        toffoli_workload, utilization_report, verify_capacity, window_slots)
from .shor import estimate, estimate_report, resource_table
from .stabsim import estimate_crossing, threshold_sweep
from .utils import ArtifactWriter, RunManifest

logger = logging.getLogger(__name__)

SUBCOMMANDS = ('params', 'layout', 'ecc', 'feasibility', 'threshold', 'spacing', 'spacing-sweep',
               'schedule', 'estimate-shor', 'reproduce-all')
# qla ecc 輸出的分組：輔助態準備、徵狀擷取、更正
STAGE_GROUPS = {'prep': 'prep', 'verify': 'prep', 'move': 'syndrome', 'interact': 'syndrome',
                'measure': 'syndrome'}


def _int_list(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(',') if x.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"需要以逗號分隔的整數: {text}") from e


def _float_list(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(',') if x.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"需要以逗號分隔的數值: {text}") from e


def _grid(text: str):
    try:
        rows, cols = (int(x) for x in text.lower().split('x'))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"格狀大小格式為 RxC: {text}") from e
    return rows, cols


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--out', default='out', help='輸出目錄')
    common.add_argument('--seed', type=int, default=0, help='亂數種子')
    common.add_argument('--workers', type=int, default=1, help='Monte Carlo 行程數')
    common.add_argument('--profile', default='expected', help='參數組名稱或 INI 檔')
    common.add_argument('--verbose', action='store_true', help='輸出除錯日誌')
    common.add_argument('--timestamp', action='store_true', help='在 manifest 中記錄時間')

    parser = argparse.ArgumentParser(prog='qla', description='QLA 離子阱微架構模擬與資源估計',
                                     parents=[common])
    sub = parser.add_subparsers(dest='command', required=True)

    params = sub.add_parser('params', parents=[common], help='技術參數')
    params.add_argument('action', choices=['show'])

    layout = sub.add_parser('layout', parents=[common], help='版面配置摘要')
    layout.add_argument('--rows', type=int, default=8)
    layout.add_argument('--cols', type=int, default=8)
    layout.add_argument('--spacing-x', type=int, default=100)

    ecc = sub.add_parser('ecc', parents=[common], help='錯誤更正延遲')
    ecc.add_argument('--level', type=int, default=2)

    feasibility = sub.add_parser('feasibility', parents=[common], help='遞迴層級可行性')
    feasibility.add_argument('--bits', type=int, default=1024)

    threshold = sub.add_parser('threshold', parents=[common], help='門檻 Monte Carlo 掃描')
    threshold.add_argument('--levels', type=_int_list, default=[1, 2])
    threshold.add_argument('--p-min', type=float, default=1e-4)
    threshold.add_argument('--p-max', type=float, default=1e-2)
    threshold.add_argument('--points', type=int, default=12)
    threshold.add_argument('--trials', type=int, default=20000)
    threshold.add_argument('--batch-size', type=int, default=2048)
    threshold.add_argument('--memory', action='store_true', help='計入參數組壽命的閒置記憶錯誤')

    spacing = sub.add_parser('spacing', parents=[common], help='單一距離的島距比較')
    spacing.add_argument('--distance', type=float, required=True)
    spacing.add_argument('--candidates', type=_float_list, default=list(DEFAULT_SPACINGS))

    sweep = sub.add_parser('spacing-sweep', parents=[common], help='距離對島距的連線時間表')
    sweep.add_argument('--start', type=float, default=500)
    sweep.add_argument('--stop', type=float, default=20000)
    sweep.add_argument('--step', type=float, default=500)
    sweep.add_argument('--candidates', type=_float_list, default=list(DEFAULT_SPACINGS))

    sched = sub.add_parser('schedule', parents=[common], help='EPR 排程')
    sched.add_argument('--grid', type=_grid, default=(8, 8))
    sched.add_argument('--bandwidth', type=int, default=2)
    sched.add_argument('--spacing', type=int, default=100)
    sched.add_argument('--workload', default='toffoli', help='toffoli、saturate 或工作負載檔')
    sched.add_argument('--gates', type=int, default=500)
    sched.add_argument('--no-drift', action='store_true', help='每次閘後把控制位元送回原位')

    shor = sub.add_parser('estimate-shor', parents=[common], help='Shor 演算法資源估計')
    shor.add_argument('--bits', type=int, default=1024)

    repro = sub.add_parser('reproduce-all', parents=[common], help='一次產生所有表格資料')
    repro.add_argument('--trials', type=int, default=1000)
    repro.add_argument('--points', type=int, default=12)
    repro.add_argument('--gates', type=int, default=500)
    return parser


def _manifest(args, profile: ParameterProfile, overrides: dict) -> RunManifest:
    manifest = RunManifest(command=args.command, profile=profile.name, seed=args.seed,
                           overrides=overrides)
    return manifest.stamp() if args.timestamp else manifest


def cmd_params(args, profile, writer):
    table = pd.DataFrame(profile_table(profile), columns=['parameter', 'value', 'unit'])
    writer.write_csv('params.csv', table)
    sys.stdout.write(table.to_csv(index=False, lineterminator='\n'))


def cmd_layout(args, profile, writer):
    layout = build_layout(args.rows, args.cols, spacing_x=args.spacing_x)
    writer.write_json('layout.json', layout_summary(layout))


def cmd_ecc(args, profile, writer):
    timing = calibrated_timing(profile.params, STEANE_LEVEL2, levels=max(args.level, 1))
    rows = [{'group': STAGE_GROUPS[name], 'stage': name, 'time_us': value}
            for name, value in syndrome_stages(args.level, profile.params, STEANE_LEVEL2)]
    synd = timing.t_syndrome[args.level]
    latency = ecc_latency(args.level, timing)
    rows.append({'group': 'syndrome', 'stage': 'syndrome_total', 'time_us': synd})
    # 平凡徵狀只需兩次擷取，其餘為非平凡時的確認、更正閘與下層更正的期望值
    rows.append({'group': 'correction', 'stage': 'expected_correction', 'time_us': latency - 2 * synd})
    rows.append({'group': 'total', 'stage': 'ecc_latency', 'time_us': latency})
    table = pd.DataFrame(rows)
    writer.write_csv(f'ecc_level{args.level}.csv', table)
    sys.stdout.write(table.to_csv(index=False, lineterminator='\n'))


def cmd_feasibility(args, profile, writer):
    result = estimate(args.bits, None, profile.params)
    report = feasibility_report(result.required_steps, recursion_model(profile.params))
    report['n_bits'] = args.bits
    writer.write_json(f'feasibility_{args.bits}.json', report)


def _threshold_table(args, profile, levels, points, trials):
    if points < 2:
        raise ConfigError(f"格點數至少為 2，得到 {points}")
    grid = [float(p) for p in np.geomspace(args.p_min, args.p_max, points)]
    table = threshold_sweep(levels=levels, p_grid=grid, trials=trials, seed=args.seed,
                            params=profile.params, workers=args.workers,
                            batch_size=getattr(args, 'batch_size', 2048),
                            memory=getattr(args, 'memory', False))
    if 1 in levels and 2 in levels:
        crossing = estimate_crossing(table)
        if crossing is None:
            logger.warning("格點範圍內找不到第一層與第二層的交會點")
        else:
            logger.info(f"門檻約 {crossing[0]:.3e}（介於 {crossing[1]:.3e} 與 {crossing[2]:.3e}）")
    return table


def cmd_threshold(args, profile, writer):
    if args.p_min <= 0 or args.p_max <= args.p_min:
        raise ConfigError(f"需要 0 < p_min < p_max，得到 {args.p_min}、{args.p_max}")
    table = _threshold_table(args, profile, args.levels, args.points, args.trials)
    writer.write_csv('threshold.csv', table)


def cmd_spacing(args, profile, writer):
    rows = []
    for spacing in args.candidates:
        row = {'spacing_cells': spacing, 'connection_time_us': np.nan, 'final_fidelity': np.nan}
        if spacing <= args.distance:
            try:
                plan = connection_plan(args.distance, spacing, profile.params)
                row.update(connection_time_us=plan.total_time, final_fidelity=plan.final_fidelity)
            except QlaError as e:
                logger.warning(f"略過島距 {spacing}: {str(e)}")
        rows.append(row)
    table = pd.DataFrame(rows)
    writer.write_csv('spacing.csv', table)
    sys.stdout.write(table.to_csv(index=False, lineterminator='\n'))


def _spacing_table(profile, distances, candidates):
    table = spacing_sweep(distances, candidates, profile.params)
    if 100 in candidates and 350 in candidates:
        crossover = spacing_crossover(distances, profile.params)
        logger.info(f"島距 350 勝過 100 的最短距離: {crossover}")
    return table


def cmd_spacing_sweep(args, profile, writer):
    distances = distances_grid(args.start, args.stop, args.step)
    writer.write_csv('spacing_sweep.csv', _spacing_table(profile, distances, args.candidates))


def _schedule_report(args, profile, rows, cols, gates, workload='toffoli', drift=True):
    layout = build_layout(rows, cols, spacing_x=args.spacing)
    graph = build_channel_graph(layout, args.bandwidth)
    window = window_slots(args.spacing, profile.params)
    if workload == 'toffoli':
        jobs = toffoli_workload(layout, gates=gates, seed=args.seed, window=window)
        result = run_toffoli(jobs, graph, drift=drift, spacing=args.spacing)
    elif workload == 'saturate':
        result = schedule(saturating_workload(graph), graph, args.spacing, window)
    else:
        result = schedule(load_workload(workload, window), graph, args.spacing, window)
    if not verify_capacity(result):
        raise QlaError("排程結果超過通道頻寬")
    report = utilization_report(result)
    report.update(workload=workload, drift=drift, grid=f'{rows}x{cols}', spacing_cells=args.spacing)
    return result, report


def cmd_schedule(args, profile, writer):
    rows, cols = args.grid
    result, report = _schedule_report(args, profile, rows, cols, args.gates, args.workload,
                                      not args.no_drift)
    writer.write_json('schedule.json', report)
    trace = pd.DataFrame([{
        'request': i, 'kind': r.request.kind,
        'src_row': r.request.src[0], 'src_col': r.request.src[1],
        'dst_row': r.request.dst[0], 'dst_col': r.request.dst[1],
        'pairs': r.request.pairs_needed, 'release_slot': r.request.release_time,
        'start_slot': r.start_slot, 'completion_slot': r.completion_slot,
        'deadline_slot': r.request.deadline, 'met_deadline': r.met_deadline,
        'hops': len(r.path) - 1, 'path_cells': r.request_cells,
        'path': ' '.join(f'{a}:{b}' for a, b in r.path),
    } for i, r in enumerate(result.routes)])
    writer.write_csv('schedule_routes.csv', trace)


def cmd_estimate_shor(args, profile, writer):
    result = estimate(args.bits, None, profile.params)
    writer.write_json(f'shor_{args.bits}.json', estimate_report(result))
    writer.write_csv(f'shor_{args.bits}.csv', resource_table(profile.params, [args.bits]))


def cmd_reproduce_all(args, profile, writer):
    writer.write_csv('resource_table.csv', resource_table(profile.params))
    args.p_min, args.p_max = 1e-4, 1e-2
    writer.write_csv('threshold.csv',
                     _threshold_table(args, profile, [1, 2], args.points, args.trials))
    writer.write_csv('spacing_sweep.csv',
                     _spacing_table(profile, distances_grid(), list(DEFAULT_SPACINGS)))
    args.spacing, args.bandwidth = 100, 2
    _, report = _schedule_report(args, profile, 8, 8, args.gates)
    writer.write_json('schedule.json', report)


HANDLERS = {
    'params': cmd_params,
    'layout': cmd_layout,
    'ecc': cmd_ecc,
    'feasibility': cmd_feasibility,
    'threshold': cmd_threshold,
    'spacing': cmd_spacing,
    'spacing-sweep': cmd_spacing_sweep,
    'schedule': cmd_schedule,
    'estimate-shor': cmd_estimate_shor,
    'reproduce-all': cmd_reproduce_all,
}


def main(argv: Optional[List[str]] = None) -> int:
    """主函數：解析子指令並執行

    Returns:
        0 成功，1 驗證或模型錯誤，2 用法錯誤
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 2

    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        if args.workers < 1:
            raise ConfigError(f"workers 必須至少為 1，得到 {args.workers}")
        profile = resolve_profile(args.profile)
        overrides = {k: v for k, v in sorted(vars(args).items())
                     if k not in ('command', 'profile', 'seed', 'out', 'verbose', 'timestamp',
                                  'workers', 'action')}
        writer = ArtifactWriter(args.out, _manifest(args, profile, overrides))
        HANDLERS[args.command](args, profile, writer)
    except QlaError as e:
        sys.stderr.write(f"error: {type(e).__name__}: {str(e)}\n")
        logger.debug("執行失敗", exc_info=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
