"""Plain-text evaluation reports and Markdown benchmark tables."""

from collections.abc import Sequence
from pathlib import Path

import structlog

from errors import CubeIOError
from models import BenchRecord, ClassSummary, EvalReport, GroundTruth

SUMMARY_COLUMNS = ("min", "q1", "median", "q3", "max")


def format_auc(value: float) -> str:
    """AUC as a percentage with two decimals, e.g. ``97.12``."""
    return f"{100.0 * value:.2f}"


def _summary_row(label: str, summary: ClassSummary) -> str:
    return f"  {label:<12}" + "".join(f"{v:>10.4f}" for v in summary.as_tuple())


class ReportRenderer:
    """Render evaluation reports from the packaged text template."""

    def __init__(self, template_path: Path) -> None:
        """Initialize report renderer.

        Args:
            template_path: Path to the evaluation report template
        """
        self.logger: structlog.typing.FilteringBoundLogger = structlog.get_logger(__name__)
        self.template_path: Path = template_path

    def render_eval(self, reports: Sequence[EvalReport], gt: GroundTruth, mask_path: str | Path) -> str:
        """Render one report covering every evaluated score map.

        Args:
            reports: Evaluation results, one per score map
            gt: Ground truth the maps were scored against
            mask_path: Mask file shown in the header

        Returns:
            Rendered report text
        """
        self.logger.info("Rendering evaluation report", maps=[r.name for r in reports])

        template = self._load_template()
        replacements = self._build_eval_replacements(reports, gt, mask_path)
        result = self._apply_replacements(template, replacements)

        self.logger.debug("Report rendered successfully", result_length=len(result))
        return result

    def render_bench(self, records: Sequence[BenchRecord]) -> str:
        """Markdown table of benchmark runs: time, final r and AUC per variant and parameter value."""
        lines = [
            "# Solver benchmark",
            "",
            "| variant | lambda4 | b | seconds | final r | iterations | AUC (%) |",
            "|---|---:|---:|---:|---:|---:|---:|",
        ]
        lines.extend(
            f"| {r.variant} | {r.lambda4:g} | {r.b} | {r.seconds:.3f} | {r.final_rank} | {r.iterations} "
            f"| {format_auc(r.auc)} |"
            for r in records
        )
        return "\n".join(lines) + "\n"

    def _load_template(self) -> str:
        """Load template from file.

        Raises:
            CubeIOError: If template file not found or cannot be read
        """
        self.logger.debug("Loading template", path=str(self.template_path))

        if not self.template_path.exists():
            self.logger.error("Template file not found", path=str(self.template_path))
            raise CubeIOError(f"Template file not found: {self.template_path}")

        try:
            return self.template_path.read_text()
        except OSError as e:
            self.logger.error("Failed to read template file", path=str(self.template_path), error=str(e))
            raise CubeIOError(f"Failed to read template file: {self.template_path}") from e

    def _build_eval_replacements(
        self,
        reports: Sequence[EvalReport],
        gt: GroundTruth,
        mask_path: str | Path,
    ) -> dict[str, str]:
        rows, cols = gt.shape
        width = max((len(r.name) for r in reports), default=1)
        auc_table = "\n".join(f"  {r.name:<{width}}  {format_auc(r.auc):>6}" for r in reports)

        header = f"  {'':<12}" + "".join(f"{c:>10}" for c in SUMMARY_COLUMNS)
        blocks = []
        for r in reports:
            gap = r.anomaly.median - r.background.q3
            blocks.append(
                "\n".join(
                    [
                        f"{r.name}:",
                        header,
                        _summary_row("background", r.background),
                        _summary_row("anomaly", r.anomaly),
                        f"  median(anomaly) - q3(background) = {gap:.4f}",
                    ]
                )
            )

        return {
            "{{MASK_PATH}}": str(mask_path),
            "{{ROWS}}": str(rows),
            "{{COLS}}": str(cols),
            "{{POSITIVES}}": str(gt.positives),
            "{{NEGATIVES}}": str(gt.negatives),
            "{{AUC_TABLE}}": auc_table,
            "{{SEPARABILITY}}": "\n\n".join(blocks),
        }

    def _apply_replacements(self, template: str, replacements: dict[str, str]) -> str:
        result = template
        for placeholder, value in replacements.items():
            result = result.replace(placeholder, value)
        return result
