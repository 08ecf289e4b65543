"""
Management command to produce trace lines for an expression
Usage: python manage.py simulate "EXPR" VECTOR [VECTOR ...]
       python manage.py simulate "EXPR" --all
Vectors hold one of T, F, 1, 0 or - (read as false) per symbol, in the order
the symbols first appear in the expression. Put `--` before a vector that
starts with "-".
"""

import logging

from django.core.management.base import CommandError

from core.management.commands._common import CfdgCommand, add_output_argument, limit
from core.services.expr_harness import (
    MAX_ENUMERATION_SYMBOLS,
    enumerate_runs,
    evaluated_symbols,
    expr_to_cfg,
    parse_expr,
    parse_vector,
    simulate,
)
from core.services.runs_traces import Run, TestSuite, serialize_traces

logger = logging.getLogger(__name__)


class Command(CfdgCommand):
    help = 'Simulate truth vectors through the CFG of an expression and print a trace file'

    def add_arguments(self, parser):
        parser.add_argument('expression', help='Boolean expression')
        group = parser.add_mutually_exclusive_group()
        group.add_argument('vectors', nargs='*', default=[], help='Truth vectors such as TF or 1-0')
        group.add_argument(
            '--all',
            action='store_true',
            help='Simulate every assignment of the expression symbols'
        )
        add_output_argument(parser)

    def run(self, *args, **options):
        lowered = expr_to_cfg(parse_expr(options['expression']))
        symbol_order = lowered.symbols

        if options['all']:
            runs = enumerate_runs(lowered, limit('MAX_ENUMERATION_SYMBOLS', MAX_ENUMERATION_SYMBOLS))
            pairs = [(assignment.vector, run) for assignment, run in runs.items()]
        elif options['vectors']:
            pairs = []
            for vector in options['vectors']:
                assignment, dont_care = parse_vector(vector, symbol_order)
                run = simulate(lowered, assignment)
                read = dont_care & evaluated_symbols(lowered, run)
                if read:
                    logger.warning(
                        f'Vector {vector}: {", ".join(sorted(read))} marked "-" but evaluated; read as false'
                    )
                pairs.append((vector, run))
        else:
            raise CommandError('Give at least one vector or --all')

        lines = [f'# symbols: {" ".join(symbol_order)}']
        for index, (vector, run) in enumerate(pairs):
            named = Run(test_name=f't{index}', path=run.path)
            lines.append(f'{serialize_traces(TestSuite(runs=(named,))).rstrip()}  # {vector}')
        self.write_output(options['output'], '\n'.join(lines) + '\n')
