"""Run tracking: a JSON-lines metrics log, optionally mirrored to MLflow."""
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

from rgn.schemas import EvalPoint
from rgn.settings import get_settings

logger = logging.getLogger(__name__)


class MetricsLog:
    """Appends one JSON object per eval point to `path`."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text("", encoding="utf-8")

    def log_point(self, point: EvalPoint) -> None:
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(point.model_dump()) + "\n")

    @staticmethod
    def read(path: Union[str, Path]) -> List[EvalPoint]:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return [EvalPoint(**json.loads(line)) for line in lines if line.strip()]


class MLflowTracker:
    """MLflow tracking run for one training run."""

    def __init__(self, tracking_uri: str, experiment_name: str, run_name: Optional[str] = None):
        import mlflow

        mlflow.set_tracking_uri(tracking_uri)
        mlflow.set_experiment(experiment_name)
        self._mlflow = mlflow
        self._run = mlflow.start_run(run_name=run_name)
        logger.info(f"MLflow run {self._run.info.run_id} in experiment {experiment_name}")

    def log_params(self, params: Dict[str, object]) -> None:
        self._mlflow.log_params({k: str(v) for k, v in params.items()})

    def log_point(self, point: EvalPoint) -> None:
        metrics = {"train_loss": point.train_loss, "train_accuracy": point.train_accuracy}
        if point.heldout_accuracy is not None:
            metrics["heldout_accuracy"] = point.heldout_accuracy
        self._mlflow.log_metrics(metrics, step=point.iteration)

    def log_artifact(self, path: Union[str, Path]) -> None:
        self._mlflow.log_artifact(str(path))

    def close(self) -> None:
        self._mlflow.end_run()


def make_tracker(run_name: Optional[str] = None) -> Optional[MLflowTracker]:
    """MLflow tracker when RGN_MLFLOW_TRACKING_URI is set, else None."""
    settings = get_settings()
    if not settings.mlflow_tracking_uri:
        return None
    try:
        return MLflowTracker(settings.mlflow_tracking_uri, settings.mlflow_experiment, run_name)
    except Exception as exc:
        logger.warning(f"MLflow tracking disabled: {exc}")
        return None
