# -*- coding: utf-8 -*-
""""""
"""
Created on Thu Mar 28 11:14:36 2024

qcube-embed command line, one subcommand per experiment
"""
import argparse
import logging
import sys
from typing import Optional, Sequence

from analysis.chernoff import chernoff_empirical, chernoff_sanity
from modules.adversary import GammaParams, covering_property_estimate, drc_defeat_experiment, generate_gamma, \
    select_block_configuration
from modules.bigraph import GraphFormatError, read_graph, write_graph
from modules.blocks import block_embed_cube, generate_block_graph, read_block_structure, write_block_structure
from modules.condensation import StandardPairFailure, estimate_condensation, find_standard_pair, \
    embed_regular_noncondensed
from modules.embedder_drc import drc_embed_cube, verify_embedding
from modules.harness import brute_force_embed, cube_embedding_from_pattern, gen_random_bipartite, \
    random_coloring, read_embedding, write_embedding
from modules.hypercube import CubeVertex
from modules.report import ExperimentReport
from modules.setup_logger import logger
from modules.trichotomy import DriveFailure, build_schedule, embed_auto, ramsey_reduce, trichotomy_drive
from utils.utils import make_rng, settings


logger = logging.getLogger(__name__)

OK, PRECONDITION, STAGE_FAILURE, IO_ERROR = 0, 1, 2, 3

DESCRIPTION = '''Embed hypercubes into dense bipartite graphs at desk scale.

exit codes: 0 success, 1 precondition or usage error, 2 stage failure or budget exhausted,
3 unreadable or malformed input file'''


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage, here usage errors are exit code 1"""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _embedding_lines(embedding) -> list:
    return [f'{CubeVertex(embedding.n, word).label()} {side.name.lower()} {host}'
            for word, side, host in embedding.items()]


def _record_result(report: ExperimentReport, result, g, args) -> int:
    """Copy an EmbeddingResult into the report, write --out, pick the exit code"""
    report.counters.update(result.counters)
    report.notes.extend(result.notes)
    report.params['trials_run'] = result.trials
    if not result.ok:
        report.outcome = result.stage or 'failed'
        return STAGE_FAILURE
    report.artifacts += _embedding_lines(result.embedding)
    if getattr(args, 'out', None):
        write_embedding(result.embedding, g, args.out)
    return OK


def cmd_gen(args, report):
    g = gen_random_bipartite(args.upper, args.lower, args.density, make_rng(args.seed))
    write_graph(g, args.out)
    report.params.update(upper=args.upper, lower=args.lower, target_density=args.density,
                         density=g.density(), edges=g.edge_count)
    return OK


def cmd_gen_blocks(args, report):
    g, bs = generate_block_graph(args.k, args.g, args.uppers, args.gamma, args.delta, make_rng(args.seed))
    write_graph(g, args.out)
    write_block_structure(bs, f'{args.out}.blocks')
    report.params.update(k=bs.k, g_size=bs.g_size, delta=bs.delta, gamma=bs.gamma, density=g.density())
    return OK


def cmd_gen_gamma(args, report):
    if args.epsilon is not None:
        params = GammaParams.from_epsilon(args.epsilon, args.n)
    else:
        params = GammaParams.desk(args.k, args.g, args.uppers)
    g, bs = generate_gamma(params, make_rng(args.seed))
    write_graph(g, args.out)
    write_block_structure(bs, f'{args.out}.blocks')
    report.params.update(k=bs.k, g_size=bs.g_size, uppers=g.upper_count, gamma=bs.gamma, density=g.density())
    return OK


def cmd_embed_drc(args, report):
    g = read_graph(args.graph)
    with report.timed('embed'):
        result = drc_embed_cube(g, args.n, args.trials, make_rng(args.seed))
    if result.params is not None:
        report.params.update(s=result.params.s, beta=float(result.params.beta))
    return _record_result(report, result, g, args)


def cmd_embed_blocks(args, report):
    g = read_graph(args.graph)
    bs = read_block_structure(args.blocks, g.upper_count)
    u, w = args.u, args.w
    if u is None or w is None:
        u, w, _ = select_block_configuration(bs, g.upper_count, args.n)
    report.params.update(u=u, w=w)
    with report.timed('embed'):
        result = block_embed_cube(g, bs, args.n, u, w, args.trials, make_rng(args.seed),
                                  strict=args.strict)
    report.params['feasibility'] = result.details['feasibility'].summary()
    return _record_result(report, result, g, args)


def cmd_embed_h(args, report):
    g = read_graph(args.graph)
    H = read_graph(args.pattern)
    rng = make_rng(args.seed)
    r = args.r or H.rows[0].bit_count()
    cert = find_standard_pair(g, args.alpha0, args.mu, r, args.attempts, rng)
    if isinstance(cert, StandardPairFailure):
        report.outcome = 'standard_pair'
        report.notes.append(f'{cert.failed_condition} after {cert.attempts} attempts')
        return STAGE_FAILURE
    report.params.update(pair=cert.pair, cn_size=cert.cn_size, M=args.M, p=args.p)
    with report.timed('embed'):
        result = embed_regular_noncondensed(g, cert, H, args.M, args.p, rng)
    report.counters.update(result.counters)
    report.notes.extend(result.notes)
    if not result.ok:
        report.outcome = result.stage
        return STAGE_FAILURE
    report.artifacts += [f'upper {i} {h}' for i, h in enumerate(result.embedding.upper_images)]
    report.artifacts += [f'lower {j} {h}' for j, h in enumerate(result.embedding.lower_images)]
    return OK


def cmd_embed_auto(args, report):
    g = read_graph(args.graph)
    with report.timed('embed'):
        result = embed_auto(g, args.n, make_rng(args.seed), _overrides(args.override), trials=args.trials,
                            strict=args.strict)
    report.params['branch'] = result.details.get('branch', 'none')
    return _record_result(report, result, g, args)


def cmd_condense(args, report):
    g = read_graph(args.graph)
    rng = make_rng(args.seed)
    if args.pair:
        pair = tuple(args.pair)
    else:
        cert = find_standard_pair(g, args.alpha0, args.mu, args.r, args.attempts, rng)
        if isinstance(cert, StandardPairFailure):
            report.outcome = 'standard_pair'
            report.notes.append(f'{cert.failed_condition} after {cert.attempts} attempts')
            return STAGE_FAILURE
        pair = cert.pair
    with report.timed('estimate'):
        estimate = estimate_condensation(g, pair, args.r, args.M, args.samples, rng, workers=args.workers)
    report.params.update(pair=pair, r=args.r, M=args.M, samples=estimate.samples, hits=estimate.hits,
                         p_hat=estimate.p_hat, wilson_radius=estimate.wilson_radius)
    return OK


def _overrides(items) -> dict:
    overrides = {}
    for item in items or ():
        key, sep, value = item.partition('=')
        if not sep:
            raise ValueError(f'override {item!r} is not key=value')
        overrides[key.strip()] = float(value) if any(ch in value for ch in '.eE') else int(value)
    return overrides


def cmd_trichotomy(args, report):
    g = read_graph(args.graph)
    rng = make_rng(args.seed)
    schedule = build_schedule(args.n, g.upper_count, g.lower_count, _overrides(args.override))
    report.params['schedule'] = {key: value for key, value in schedule.to_dict().items() if key != 'audit'}
    report.notes += [f'audit: {line}' for line in schedule.audit]
    if args.schedule_out:
        schedule.dump(args.schedule_out)

    with report.timed('drive'):
        outcome = trichotomy_drive(g, schedule, rng, workers=args.workers)
    if outcome.history is not None:
        report.add_table('history', outcome.history)
    if isinstance(outcome, DriveFailure):
        report.outcome = outcome.stage
        report.notes.append(f'iteration {outcome.iteration}: {outcome.detail}')
        return STAGE_FAILURE

    report.params['certificate'] = outcome.kind
    problems = outcome.recheck(g)
    report.notes += [f'recheck: {problem}' for problem in problems]
    if problems:
        report.outcome = 'recheck_failed'
        return STAGE_FAILURE
    return OK


def cmd_defeat(args, report):
    g = read_graph(args.graph)
    bs = read_block_structure(args.blocks, g.upper_count)
    rng = make_rng(args.seed)
    if args.arity:
        covering = covering_property_estimate(g, bs, args.sample_size or g.upper_count, args.arity, rng)
        report.params['covering'] = covering.summary()
    with report.timed('defeat'):
        outcome = drc_defeat_experiment(g, bs, args.n, args.trials, rng, u=args.u, w=args.w)
    report.params.update(outcome.summary())
    report.timings.update(naive=outcome.drc_seconds, block=outcome.block_seconds)
    return OK


def cmd_verify(args, report):
    g = read_graph(args.graph)
    embedding, sizes = read_embedding(args.embedding)
    if sizes != (g.upper_count, g.lower_count):
        raise GraphFormatError(args.embedding, 1, f'embedding is for a {sizes[0]}x{sizes[1]} host, '
                                                  f'graph is {g.upper_count}x{g.lower_count}')
    violations = verify_embedding(g, embedding)
    report.params.update(n=embedding.n, violations=len(violations))
    report.notes += violations
    if violations:
        report.outcome = 'invalid'
        return STAGE_FAILURE
    return OK


def cmd_chernoff(args, report):
    rng = make_rng(args.seed)
    kwargs = {'c': args.c} if args.c is not None else {}
    if args.exhaustive or args.p is not None:
        table = chernoff_empirical(args.p or 0.5, args.n_vars or 4, samples=args.samples, rng=rng,
                                   exhaustive=args.exhaustive, **kwargs)
    else:
        table = chernoff_sanity(samples=args.samples, rng=rng, **kwargs)
    report.add_table('chernoff', table)
    flagged = int(table['flagged'].sum())
    report.params['flagged'] = flagged
    if flagged:
        report.outcome = 'bound_exceeded'
        return STAGE_FAILURE
    return OK


def cmd_brute(args, report):
    g = read_graph(args.graph)
    pattern = read_graph(args.pattern) if args.pattern else args.n
    if pattern is None:
        raise ValueError('brute needs --n or --pattern')
    kwargs = {'time_budget': args.time_budget} if args.time_budget is not None else {}
    with report.timed('search'):
        search = brute_force_embed(g, pattern, **kwargs)
    report.params.update(status=search.status, swapped=search.swapped, nodes=search.nodes)
    if search.embedding is None:
        report.outcome = search.status
        return STAGE_FAILURE
    if args.pattern:
        report.artifacts += [f'upper {i} {h}' for i, h in enumerate(search.embedding.upper_images)]
        report.artifacts += [f'lower {j} {h}' for j, h in enumerate(search.embedding.lower_images)]
    else:
        embedding = cube_embedding_from_pattern(args.n, search.embedding, swapped=search.swapped)
        report.artifacts += _embedding_lines(embedding)
        if args.out:
            write_embedding(embedding, g, args.out)
    return OK


def cmd_ramsey(args, report):
    rng = make_rng(args.seed)
    g = ramsey_reduce(random_coloring(args.N, rng))
    report.params.update(N=args.N, density=g.density())
    with report.timed('embed'):
        result = embed_auto(g, args.n, rng, trials=args.trials)
    report.params['branch'] = result.details.get('branch', 'none')
    return _record_result(report, result, g, args)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument('--seed', type=int, default=0, help='Root seed of the random streams')
    common.add_argument('--report', help='Also write the report to this file')
    common.add_argument('--csv-prefix', help='Write report tables as <prefix>_<name>.csv')
    common.add_argument('--timings', action='store_true', help='Include wall-clock timings in the report')

    ap = _Parser(prog='qcube-embed', description=DESCRIPTION, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest='command', required=True, metavar='command')

    def command(name, handler, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(handler=handler)
        return p

    workers = settings('runtime')['workers']

    p = command('gen', cmd_gen, 'Random bipartite graph')
    p.add_argument('--upper', type=int, required=True)
    p.add_argument('--lower', type=int, required=True)
    p.add_argument('--density', type=float, required=True)
    p.add_argument('--out', required=True)

    p = command('gen-blocks', cmd_gen_blocks, 'Random block-structured graph plus .blocks sidecar')
    p.add_argument('--k', type=int, required=True)
    p.add_argument('--g', type=int, required=True)
    p.add_argument('--uppers', type=int, required=True)
    p.add_argument('--gamma', type=float, required=True)
    p.add_argument('--delta', type=float, required=True)
    p.add_argument('--out', required=True)

    p = command('gen-gamma', cmd_gen_gamma, 'Density 1/2 random block graph plus .blocks sidecar')
    p.add_argument('--k', type=int, default=32)
    p.add_argument('--g', type=int, default=32)
    p.add_argument('--uppers', type=int, default=4096)
    p.add_argument('--epsilon', type=float, help='Use the sizes derived from epsilon and --n')
    p.add_argument('--n', type=int)
    p.add_argument('--out', required=True)

    p = command('embed-drc', cmd_embed_drc, 'Dependent random choice embedding of Q_n')
    p.add_argument('--graph', required=True)
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--trials', type=int, default=10)
    p.add_argument('--out', help='Embedding file')

    p = command('embed-blocks', cmd_embed_blocks, 'Block embedding of Q_n')
    p.add_argument('--graph', required=True)
    p.add_argument('--blocks', required=True)
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--u', type=int)
    p.add_argument('--w', type=int)
    p.add_argument('--trials', type=int, default=10)
    p.add_argument('--strict', action='store_true', help='Refuse block embedding when the feasibility check fails')
    p.add_argument('--out', help='Embedding file')

    p = command('embed-h', cmd_embed_h, 'Embed an r-regular pattern next to a standard pair')
    p.add_argument('--graph', required=True)
    p.add_argument('--pattern', required=True)
    p.add_argument('--r', type=int, help='Pattern degree, read from the pattern by default')
    p.add_argument('--M', type=int, required=True)
    p.add_argument('--p', type=float, required=True)
    p.add_argument('--alpha0', type=float, default=settings('trichotomy')['alpha0'])
    p.add_argument('--mu', type=float, default=settings('trichotomy')['mu'])
    p.add_argument('--attempts', type=int, default=settings('condensation')['pair_attempts'])

    p = command('embed-auto', cmd_embed_auto, 'Trichotomy-driven embedding of Q_n with fallbacks')
    p.add_argument('--graph', required=True)
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--trials', type=int, default=8)
    p.add_argument('--override', action='append', metavar='KEY=VALUE')
    p.add_argument('--strict', action='store_true', help='Refuse block embedding when the feasibility check fails')
    p.add_argument('--out', help='Embedding file')

    p = command('condense', cmd_condense, 'Estimate the condensation probability of a pair')
    p.add_argument('--graph', required=True)
    p.add_argument('--r', type=int, required=True)
    p.add_argument('--M', type=int, required=True)
    p.add_argument('--samples', type=int, default=settings('condensation')['samples'])
    p.add_argument('--pair', type=int, nargs=2, metavar=('V1', 'V2'))
    p.add_argument('--alpha0', type=float, default=settings('trichotomy')['alpha0'])
    p.add_argument('--mu', type=float, default=settings('trichotomy')['mu'])
    p.add_argument('--attempts', type=int, default=settings('condensation')['pair_attempts'])
    p.add_argument('--workers', type=int, default=workers)

    p = command('trichotomy', cmd_trichotomy, 'Run the trichotomy and recheck its certificate')
    p.add_argument('--graph', required=True)
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--override', action='append', metavar='KEY=VALUE')
    p.add_argument('--schedule-out', help='Dump the parameter schedule as YAML')
    p.add_argument('--workers', type=int, default=workers)

    p = command('defeat', cmd_defeat, 'Naive versus block embedder on a block graph')
    p.add_argument('--graph', required=True)
    p.add_argument('--blocks', required=True)
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--trials', type=int, default=20)
    p.add_argument('--u', type=int)
    p.add_argument('--w', type=int)
    p.add_argument('--arity', type=int, help='Also estimate the covering property for tuples of this length')
    p.add_argument('--sample-size', type=int)

    p = command('verify', cmd_verify, 'Check an embedding file against a graph')
    p.add_argument('--graph', required=True)
    p.add_argument('--embedding', required=True)

    p = command('chernoff', cmd_chernoff, 'Empirical Bernoulli tails against the Chernoff bound')
    p.add_argument('--p', type=float)
    p.add_argument('--n-vars', type=int)
    p.add_argument('--samples', type=int)
    p.add_argument('--c', type=float)
    p.add_argument('--exhaustive', action='store_true')

    p = command('brute', cmd_brute, 'Exhaustive embedding search')
    p.add_argument('--graph', required=True)
    p.add_argument('--n', type=int)
    p.add_argument('--pattern')
    p.add_argument('--time-budget', type=float)
    p.add_argument('--out', help='Embedding file')

    p = command('ramsey', cmd_ramsey, 'Random 2-coloring of K_N, majority cut, embed Q_n')
    p.add_argument('--N', type=int, required=True)
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--trials', type=int, default=8)

    return ap


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f'{parser.prog}: error: {exc}', file=sys.stderr)
        return PRECONDITION
    except SystemExit as exc:
        return exc.code or OK

    report = ExperimentReport(command=' '.join(argv), seed=args.seed)
    try:
        code = args.handler(args, report)
    except GraphFormatError as exc:
        logger.error("%s", exc)
        print(f'error: {exc}', file=sys.stderr)
        return IO_ERROR
    except OSError as exc:
        logger.error("%s", exc)
        print(f'error: {exc}', file=sys.stderr)
        return IO_ERROR
    except ValueError as exc:
        print(f'error: {exc}', file=sys.stderr)
        return PRECONDITION

    text = report.render(args.timings)
    sys.stdout.write(text)
    if args.report:
        report.write(args.report, args.timings)
    if args.csv_prefix:
        report.write_tables(args.csv_prefix)
    return code


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
