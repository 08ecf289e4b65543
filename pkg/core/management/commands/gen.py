"""
Management command to lower a boolean expression to a CFG dot file
Usage: python manage.py gen "EXPR" [--annotate] [-o OUT]
"""

import logging

from core.management.commands._common import CfdgCommand, add_output_argument
from core.services.decision_inference import create_cfdg
from core.services.dot_codec import document_from_cfg, emit_annotated_dot
from core.services.expr_harness import expr_to_cfg, parse_expr

logger = logging.getLogger(__name__)


class Command(CfdgCommand):
    help = 'Build the control-flow graph of a boolean expression and print it as dot'

    def add_arguments(self, parser):
        parser.add_argument(
            'expression',
            help='Expression over &&, ||, &, |, ^, ! and parentheses, e.g. "(a && b) || c"'
        )
        parser.add_argument(
            '--annotate',
            action='store_true',
            help='Wrap the inferred decision in a "Decision n" cluster'
        )
        add_output_argument(parser)

    def run(self, *args, **options):
        lowered = expr_to_cfg(parse_expr(options['expression']))
        document = document_from_cfg(lowered.cfg, name='decision')
        text = document.text
        if options['annotate']:
            cfdg, _ = create_cfdg(lowered.cfg)
            text = emit_annotated_dot(document, [cfdg])
        logger.info(
            f'{lowered.expr}: {len(lowered.conditions)} condition vertices, '
            f'symbols {" ".join(lowered.symbols)}'
        )
        self.write_output(options['output'], text)
