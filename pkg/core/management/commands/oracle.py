"""
Management command to find the smallest test suites meeting a criterion
Usage: python manage.py oracle "EXPR" [--criterion ...] [--semantics ...] [--loop-mode ...]
       [--format text|json]
"""

import json
import logging

from core.management.commands._common import (
    CfdgCommand,
    add_criterion_argument,
    add_format_argument,
    add_semantics_arguments,
    limit,
    resolve_loop_mode,
    resolve_semantics,
)
from core.services.coverage import Criterion
from core.services.expr_harness import MAX_ORACLE_SYMBOLS, expr_to_cfg, minimal_suites, parse_expr
from core.utils.reporting import render_suites

logger = logging.getLogger(__name__)


class Command(CfdgCommand):
    help = 'Search exhaustively for the minimal suites of distinct runs that satisfy a criterion'

    def add_arguments(self, parser):
        parser.add_argument('expression', help='Boolean expression')
        add_criterion_argument(parser)
        add_semantics_arguments(parser)
        add_format_argument(parser)

    def run(self, *args, **options):
        lowered = expr_to_cfg(parse_expr(options['expression']))
        criterion = Criterion(options['criterion'])
        semantics = resolve_semantics(options)
        suites = minimal_suites(
            lowered,
            criterion,
            semantics=semantics,
            loop_mode=resolve_loop_mode(options),
            max_symbols=limit('MAX_ORACLE_SYMBOLS', MAX_ORACLE_SYMBOLS),
        )

        if options['format'] == 'json':
            payload = {
                'expression': str(lowered.expr),
                'symbols': list(lowered.symbols),
                'criterion': criterion.value,
                'semantics': semantics.value,
                'minimal_size': len(suites[0]) if suites else None,
                'suites': [suite.names for suite in suites],
            }
            self.stdout.write(json.dumps(payload, indent=2))
            return

        self.stdout.write(f'{criterion.value.upper()} under {semantics.value} for {lowered.expr}')
        self.stdout.write('=' * 50)
        for line in render_suites(suites, lowered.symbols):
            self.stdout.write(line)
        if suites:
            self.stdout.write(self.style.SUCCESS(f'Minimal suite size: {len(suites[0])}'))
        else:
            self.stdout.write(self.style.WARNING('Criterion unsatisfiable by any suite'))
