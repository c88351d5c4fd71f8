"""Static SVG plots of factor-model trajectories in their PCA plane."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .config import PipelineConfig  # noqa: E402
from .exceptions import InvalidInputError  # noqa: E402
from .pipeline import FACTOR_MODELS, FACTOR_NAMES, Segment, derived_points, embed, interpolate_gaps, resample  # noqa: E402


def embedded_trajectories(session, factor_model, config=None):
    """2-D trajectories of a factor model's points over a whole session."""
    config = config or PipelineConfig()
    if factor_model not in FACTOR_NAMES:
        raise InvalidInputError(f"unknown factor model {factor_model!r}; valid: {', '.join(FACTOR_NAMES)}")
    model = FACTOR_MODELS[FACTOR_NAMES.index(factor_model)]
    s = resample(interpolate_gaps(session), config.rate_hz)
    whole = Segment(s.id, 0, s.entities, s.times, s.positions)
    flat = embed(model, derived_points(whole))
    return {name: flat[name] for name in model.points}


def plot_embedded(session, factor_model, path, config=None):
    """Write an SVG with one trace per point; start marked by a circle."""
    traces = embedded_trajectories(session, factor_model, config)
    with plt.rc_context({"svg.hashsalt": "qsrevents", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5, 5))
        for name, xy in traces.items():
            line, = ax.plot(xy[:, 0], xy[:, 1], lw=1, label=name)
            ax.plot(xy[0, 0], xy[0, 1], "o", ms=4, color=line.get_color())
        ax.set_aspect("equal", adjustable="datalim")
        ax.set_xlabel("first principal axis")
        ax.set_ylabel("second principal axis")
        ax.set_title(f"{session.id}: {factor_model}")
        ax.legend(fontsize=7, loc="best")
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return {name: np.asarray(xy) for name, xy in traces.items()}
