"""
Management command to measure test-suite coverage of a CFG
Usage: python manage.py coverage FILE.dot TRACES [--criterion sc|dc|cc|dcc|mcc|fpc|mcdc|all]
       [--semantics masking|strict|paper-literal] [--loop-mode traversal|edge-set]
       [--format text|json] [--function NAME] [--allow-partial] [--dialect ...]
"""

import logging

from django.core.management.base import CommandError

from core.management.commands._common import (
    EXIT_BELOW_FULL,
    CfdgCommand,
    add_criterion_argument,
    add_dialect_argument,
    add_format_argument,
    add_semantics_arguments,
    resolve_dialect,
    resolve_loop_mode,
    resolve_semantics,
)
from core.exceptions import CfdgError
from core.services.coverage import Criterion, evaluate, evaluate_all
from core.services.decision_inference import create_cfdg
from core.services.dot_codec import parse_dot
from core.services.runs_traces import parse_traces
from core.utils.reporting import render_reports

logger = logging.getLogger(__name__)


class Command(CfdgCommand):
    help = 'Evaluate a coverage criterion for a trace file against the decisions of a CFG'

    def add_arguments(self, parser):
        parser.add_argument('dot', help='CFG dot file ("-" reads standard input)')
        parser.add_argument('traces', help='Trace file, one run per line ("-" reads standard input)')
        add_criterion_argument(parser, allow_all=True)
        add_semantics_arguments(parser)
        add_format_argument(parser)
        add_dialect_argument(parser)
        parser.add_argument(
            '--function',
            help='Function to measure when the dot file holds several (default: the first)'
        )
        parser.add_argument(
            '--allow-partial',
            action='store_true',
            help='Accept runs that stop before an exit vertex'
        )

    def run(self, *args, **options):
        if options['dot'] == '-' and options['traces'] == '-':
            raise CommandError('Only one of the inputs can be read from standard input')

        document = parse_dot(self.read_input(options['dot']), resolve_dialect(options))
        function = self._select(document, options.get('function'))
        cfdg, _ = create_cfdg(function.cfg)
        suite = parse_traces(
            self.read_input(options['traces']),
            function.cfg,
            allow_partial=options['allow_partial'],
        )
        semantics = resolve_semantics(options)
        loop_mode = resolve_loop_mode(options)
        logger.info(
            f'{function.name}: {len(cfdg.decisions)} decision(s), {len(suite)} run(s), '
            f'semantics={semantics.value}, loop-mode={loop_mode.value}'
        )

        if options['criterion'] == 'all':
            reports = evaluate_all(cfdg, suite, semantics, loop_mode)
        else:
            reports = [evaluate(cfdg, suite, Criterion(options['criterion']), semantics, loop_mode)]

        self.stdout.write(render_reports(reports, options['format']))

        incomplete = [r.criterion.value for r in reports if not r.complete]
        if incomplete:
            raise CommandError(
                f'Coverage below 100% for {", ".join(incomplete)}',
                returncode=EXIT_BELOW_FULL,
            )
        if options['format'] == 'text':
            self.stdout.write(self.style.SUCCESS('Full coverage'))

    def _select(self, document, name):
        if not document.functions:
            raise CfdgError('The dot file holds no control-flow graph')
        if name is None:
            if len(document.functions) > 1:
                self.stderr.write(self.style.WARNING(
                    f'{len(document.functions)} functions found, measuring {document.functions[0].name}'
                ))
            return document.functions[0]
        for function in document.functions:
            if function.name == name:
                return function
        known = ', '.join(f.name for f in document.functions)
        raise CfdgError(f'No function named {name!r} (found: {known})')
