"""
Management command to annotate CFG dot dumps with their decisions
Usage: python manage.py annotate FILE [FILE ...] [-o OUT] [--dialect gcc|clang|generic]
       [--normalize-interstitial] [--strict] [--report]
"""

import logging

from django.core.management.base import CommandError

from core.management.commands._common import (
    EXIT_INVARIANT,
    CfdgCommand,
    add_dialect_argument,
    add_output_argument,
    resolve_dialect,
)
from core.services.decision_inference import (
    create_cfdg,
    normalize_interstitial,
    restore_interstitial,
    verify_decision_invariants,
)
from core.services.dot_codec import emit_annotated_dot, parse_dot
from core.utils.reporting import render_invariants

logger = logging.getLogger(__name__)


class Command(CfdgCommand):
    help = 'Wrap every decision of a CFG dot file in a "Decision n" cluster'

    def add_arguments(self, parser):
        parser.add_argument(
            'inputs',
            nargs='+',
            help='Dot files to annotate ("-" reads standard input)'
        )
        add_output_argument(parser)
        add_dialect_argument(parser)
        parser.add_argument(
            '--normalize-interstitial',
            action='store_true',
            help='Contract single-edge vertices between conditions before inferring decisions'
        )
        parser.add_argument(
            '--strict',
            action='store_true',
            help='Exit with code 2 when a decision violates the structural invariants'
        )
        parser.add_argument(
            '--report',
            action='store_true',
            help='Print invariant checks and merge statistics to standard error'
        )

    def run(self, *args, **options):
        dialect = resolve_dialect(options)
        outputs = []
        violations = 0

        for path in options['inputs']:
            document = parse_dot(self.read_input(path), dialect)
            cfdgs = []
            for function in document.functions:
                cfg, contraction = function.cfg, {}
                if options['normalize_interstitial']:
                    cfg, contraction = normalize_interstitial(cfg)
                cfdg, stats = create_cfdg(cfg)
                report = verify_decision_invariants(cfdg)
                violations += len(report.failures())
                if options['report']:
                    self.stderr.write(render_invariants(f'{path}:{function.name}', report, stats))
                if contraction:
                    cfdg = restore_interstitial(cfdg, function.cfg, contraction)
                cfdgs.append(cfdg)
            outputs.append(emit_annotated_dot(document, cfdgs))
            logger.info(f'Annotated {path}: {sum(len(c.decisions) for c in cfdgs)} decision(s)')

        self.write_output(options['output'], ''.join(outputs))

        if violations and options['strict']:
            raise CommandError(
                f'{violations} decision(s) violate the structural invariants',
                returncode=EXIT_INVARIANT,
            )
