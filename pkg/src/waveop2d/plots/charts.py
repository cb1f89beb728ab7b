"""
Chart creation for report bundles: plotly figures written as SVG, HTML as fallback.
"""

from pathlib import Path
from typing import Dict, List, Sequence

import plotly.graph_objects as go
from loguru import logger

from waveop2d.workbench_types import CheckResult, VerificationReport


class ChartManager:
    """Builds the report figures and writes them next to report.json."""

    def __init__(self, output_dir: Path):
        self.output_dir = Path(output_dir)
        self.chart_config = {
            'height': 420,
            'width': 720,
            'margin': dict(l=60, r=30, t=60, b=50),
            'template': 'plotly_white'
        }

    def create_phase_chart(self, levinson: CheckResult) -> go.Figure:
        """arg det S(lambda) against log lambda, with the threshold estimate."""
        try:
            curve = levinson.evidence.get("phase_curve")
            if not curve:
                return self._create_empty_chart("No phase curve available")

            fig = go.Figure()
            fig.add_trace(go.Scatter(
                x=curve["energies"],
                y=curve["phases"],
                mode='lines+markers',
                name='arg det S',
                line=dict(color='blue', width=2),
                marker=dict(size=4),
            ))
            fig.add_hline(
                y=levinson.evidence.get("threshold_phase", 0.0),
                line_dash="dash",
                line_color="gray",
                annotation_text="threshold estimate"
            )
            corrected = levinson.evidence.get("winding_corrected", float("nan"))
            fig.update_layout(
                title=f'Phase of det S - corrected winding {corrected:+.4f}',
                xaxis_title='lambda',
                yaxis_title='arg det S (rad)',
                **self.chart_config
            )
            fig.update_xaxes(type='log')
            return fig

        except (KeyError, TypeError, ValueError) as e:
            logger.error(f"Error creating phase chart: {e}")
            return self._create_empty_chart(f"Error: {str(e)}")

    def create_decay_chart(self, probes: Sequence[CheckResult]) -> go.Figure:
        """Norm sequences of the compactness probes, with their controls dotted."""
        try:
            probes = [p for p in probes if "norms" in p.evidence]
            if not probes:
                return self._create_empty_chart("No probe sequences available")

            fig = go.Figure()
            for probe in probes:
                labels = probe.evidence.get("labels", list(range(len(probe.evidence["norms"]))))
                fig.add_trace(go.Scatter(
                    x=labels, y=probe.evidence["norms"], mode='lines+markers',
                    name=f'{probe.name} ({probe.verdict.value})',
                ))
                if "control_norms" in probe.evidence:
                    fig.add_trace(go.Scatter(
                        x=labels, y=probe.evidence["control_norms"], mode='lines',
                        name=f'{probe.name} control', line=dict(dash='dot'),
                    ))
            fig.update_layout(
                title='Compactness probes',
                xaxis_title='family label',
                yaxis_title='norm',
                **self.chart_config
            )
            fig.update_yaxes(type='log')
            return fig

        except (KeyError, TypeError, ValueError) as e:
            logger.error(f"Error creating decay chart: {e}")
            return self._create_empty_chart(f"Error: {str(e)}")

    def create_sigma_chart(self, zero_energy: CheckResult) -> go.Figure:
        """sigma_min(M0(lambda + i0)) down the zero-energy ladder."""
        ladder = zero_energy.evidence.get("ladder")
        sigma = zero_energy.evidence.get("sigma_min")
        if not ladder or not sigma:
            return self._create_empty_chart("No zero-energy ladder available")
        fig = go.Figure()
        fig.add_trace(go.Scatter(x=ladder, y=sigma, mode='lines+markers', name='sigma_min',
                                 line=dict(color='purple', width=2)))
        fig.add_hline(y=zero_energy.evidence.get("resonance_tol", 1e-3), line_dash="dash",
                      line_color="red", annotation_text="resonance tolerance")
        fig.update_layout(
            title=f'Zero-energy diagnostic - {zero_energy.verdict.value}',
            xaxis_title='lambda',
            yaxis_title='sigma_min',
            **self.chart_config
        )
        fig.update_xaxes(type='log')
        fig.update_yaxes(type='log')
        return fig

    def create_unitarity_chart(self, unitarity: CheckResult) -> go.Figure:
        """||S^* S - 1|| and the reciprocity defect per energy."""
        energies = unitarity.evidence.get("energies")
        if not energies:
            return self._create_empty_chart("No unitarity data available")
        fig = go.Figure()
        fig.add_trace(go.Scatter(x=energies, y=unitarity.evidence["unitarity_defects"],
                                 mode='lines', name='unitarity'))
        fig.add_trace(go.Scatter(x=energies, y=unitarity.evidence["reciprocity_defects"],
                                 mode='lines', name='reciprocity', line=dict(dash='dot')))
        fig.add_hline(y=unitarity.threshold, line_dash="dash", line_color="gray",
                      annotation_text="tolerance")
        fig.update_layout(title='S(lambda) defects', xaxis_title='lambda',
                          yaxis_title='defect', **self.chart_config)
        fig.update_xaxes(type='log')
        fig.update_yaxes(type='log', exponentformat='e')
        return fig

    def write_report_charts(self, report: VerificationReport) -> List[Path]:
        """Every chart the report has data for"""
        figures: Dict[str, go.Figure] = {}
        levinson = report.get("levinson")
        if levinson is not None:
            figures["phase_curve"] = self.create_phase_chart(levinson)
        probes = [c for c in report.checks if "compactness" in c.name]
        if probes:
            figures["decay_sequences"] = self.create_decay_chart(probes)
        zero = report.get("zero_energy")
        if zero is not None:
            figures["sigma_min_ladder"] = self.create_sigma_chart(zero)
        unitarity = report.get("smatrix_unitarity")
        if unitarity is not None:
            figures["unitarity_defects"] = self.create_unitarity_chart(unitarity)
        return [self.write(fig, name) for name, fig in figures.items()]

    def write(self, fig: go.Figure, name: str) -> Path:
        """SVG through kaleido; self-contained HTML when static export is unavailable."""
        self.output_dir.mkdir(parents=True, exist_ok=True)
        path = self.output_dir / f"{name}.svg"
        try:
            fig.write_image(str(path), format="svg")
        except Exception as e:
            path = self.output_dir / f"{name}.html"
            logger.warning(f"Static export unavailable ({e}); writing {path.name}")
            fig.write_html(str(path), include_plotlyjs=True, full_html=True)
        return path

    def _create_empty_chart(self, message: str) -> go.Figure:
        """Create an empty chart with a message."""
        fig = go.Figure()

        fig.add_annotation(
            x=0.5,
            y=0.5,
            xref='paper',
            yref='paper',
            text=message,
            showarrow=False,
            font=dict(size=16, color="gray")
        )

        fig.update_layout(
            title='Chart Unavailable',
            showlegend=False,
            **self.chart_config
        )

        return fig
