import json
import math

import numpy as np
import pytest

from commfeat.errors import InputError
from commfeat.evaluation import (
    METRIC_ORDER, CurveSeries, EvalReport, MetricsRecord,
    accuracy_at_percentile, confusion, evaluate_predictions,
    format_metrics_table, global_metrics, per_degree_series, pr_curve,
    write_curve_csv,
)
from commfeat.graphs import Graph

from oracles import reference_metrics


def random_triple(rng, n):
    y = (rng.random(n) < 0.5).astype(int)
    y_hat = (rng.random(n) < 0.5).astype(int)
    y_conf = rng.uniform(0.01, 0.99, size=n)
    return y, y_hat, y_conf


class TestConfusion:
    def test_hand_case(self):
        tp, fp, tn, fn = confusion([1, 1, 0, 0, 1], [1, 0, 0, 1, 1])
        assert (tp, fp, tn, fn) == (2, 1, 1, 1)

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            confusion([1, 0], [1])


class TestGlobalMetrics:
    def test_matches_reference_implementation(self, rng):
        for _ in range(20):
            y, y_hat, y_conf = random_triple(rng, int(rng.integers(5, 30)))
            got = global_metrics(y, y_hat, y_conf).as_dict()
            want = reference_metrics(y, y_hat, y_conf)
            for name in METRIC_ORDER:
                assert got[name] == pytest.approx(want[name], abs=1e-12), name

    def test_zero_denominators(self):
        record = global_metrics([0, 0], [0, 0], [0.2, 0.3])
        assert record.precision == 0.0
        assert record.recall == 0.0
        assert record.f1 == 0.0
        assert record.bcr == 0.5  # TPR counts 0 for the empty class, TNR is 1

    def test_likelihood_is_summed(self):
        record = global_metrics([1, 1], [1, 1], [0.5, 0.5])
        assert record.neg_log_likelihood == pytest.approx(2 * math.log(2.0))


class TestPrCurve:
    def test_hand_case(self):
        # ranking by |conf − 0.5|: rows 0, 1, 2; all predicted positive.
        # prefix precisions 1, 1/2, 2/3 at recalls 1/2, 1/2, 1 →
        # the kept series is (recall, precision) = (0.5, 0.5), (1.0, 2/3)
        series, area = pr_curve([1, 0, 1], [0.9, 0.8, 0.6])
        assert series.x == (0.5, 1.0)
        assert series.y == pytest.approx((0.5, 2 / 3))
        # trapezoid over the full prefix path: 0.5 · (0.5 + 2/3) / 2
        assert area == pytest.approx(7 / 24)

    def test_final_point_is_global_precision_recall(self, rng):
        for _ in range(10):
            y, y_hat, y_conf = random_triple(rng, 40)
            if not y.any():
                continue
            record = global_metrics(y, (y_conf >= 0.5).astype(int), y_conf)
            series, _ = pr_curve(y, y_conf)
            assert series.y[-1] == pytest.approx(record.precision)
            assert series.x[-1] == pytest.approx(record.recall)

    def test_rank_ties_break_by_index(self):
        # both rows sit at distance 0.1 from ½; the stable sort keeps row 0
        # first, so the one positive is recovered immediately
        series, _ = pr_curve([1, 0], [0.6, 0.4])
        assert series.x == (1.0,)
        assert series.y == (1.0,)

    def test_all_low_confidence(self):
        # nothing is predicted positive: recall never moves, precision is 0
        series, area = pr_curve([1], [0.1])
        assert series.x == (0.0,)
        assert series.y == (0.0,)
        assert area == 0.0

    def test_needs_a_positive(self):
        with pytest.raises(InputError, match="at least one positive"):
            pr_curve([0, 0], [0.4, 0.6])


class TestAccuracyAtPercentile:
    def test_hand_case(self):
        series = accuracy_at_percentile([1, 0], [0.9, 0.6], [1, 1], step=50)
        assert series.x == (50.0, 100.0)
        assert series.y == (1.0, 0.5)

    def test_full_percentile_is_global_accuracy(self, rng):
        y, y_hat, y_conf = random_triple(rng, 33)
        series = accuracy_at_percentile(y, y_conf, y_hat, step=7)
        assert series.x[-1] == 100.0
        assert series.y[-1] == pytest.approx(float(np.mean(y == y_hat)))

    def test_prefix_count_is_ceiling(self):
        # n = 7 at p = 50 keeps ceil(3.5) = 4 predictions
        y = [1, 1, 1, 1, 0, 0, 0]
        y_conf = [0.99, 0.98, 0.97, 0.96, 0.6, 0.6, 0.6]
        y_hat = [1, 1, 1, 0, 1, 1, 1]
        series = accuracy_at_percentile(y, y_conf, y_hat, step=50)
        assert series.y[0] == pytest.approx(3 / 4)

    def test_step_100_gives_single_point(self):
        series = accuracy_at_percentile([1, 0], [0.6, 0.6], [1, 0], step=100)
        assert series.x == (100.0,)

    @pytest.mark.parametrize("step", [0, 101, -5])
    def test_step_validation(self, step):
        with pytest.raises(InputError, match="percentile step"):
            accuracy_at_percentile([1, 0], [0.6, 0.6], [1, 0], step=step)


class TestPerDegreeSeries:
    def test_grouping_and_standard_error(self, path4):
        # degrees are (1, 2, 2, 1); both groups hold values {1, 0}, so the
        # mean is 0.5 and the error is std(1,0)/√2 = 0.5/√2
        series = per_degree_series([1.0, 0.0, 1.0, 0.0], path4, "per_degree_accuracy")
        assert series.x == (1.0, 2.0)
        assert series.y == (0.5, 0.5)
        assert series.err == pytest.approx((0.35355339, 0.35355339))

    def test_singleton_group_error_is_zero(self):
        g = Graph(3, frozenset({(0, 1)}), ("a", "b", "c"))
        series = per_degree_series([1.0, 0.0, 1.0], g, "per_degree_perplexity")
        assert series.x == (0.0, 1.0)
        assert series.err[0] == 0.0  # the degree-0 node is alone in its group

    def test_node_ids_keep_full_graph_degrees(self, path4):
        # evaluating only the two interior nodes: their degree stays 2 even
        # though the subset alone would suggest otherwise
        series = per_degree_series(
            [1.0, 0.0], path4, "per_degree_accuracy", node_ids=[1, 2]
        )
        assert series.x == (2.0,)
        assert series.y == (0.5,)

    def test_length_checks(self, path4):
        with pytest.raises(InputError, match="values for 4 graph nodes"):
            per_degree_series([1.0], path4, "per_degree_accuracy")
        with pytest.raises(InputError, match="parallel"):
            per_degree_series([1.0, 0.0], path4, "per_degree_accuracy", node_ids=[1])

    def test_unknown_kind(self, path4):
        with pytest.raises(InputError, match="per-degree kind"):
            per_degree_series([1.0] * 4, path4, "pr")


class TestCurveSeries:
    def test_unknown_kind(self):
        with pytest.raises(InputError, match="curve kind"):
            CurveSeries((1,), (1,), kind="mystery")

    def test_length_mismatch(self):
        with pytest.raises(InputError, match="lengths differ"):
            CurveSeries((1, 2), (1,), kind="pr")

    def test_non_increasing_x(self):
        with pytest.raises(InputError, match="strictly increasing"):
            CurveSeries((1, 1), (0.5, 0.5), kind="pr")

    def test_per_degree_requires_errors(self):
        with pytest.raises(InputError, match="one error per point"):
            CurveSeries((1, 2), (0.5, 0.5), kind="per_degree_accuracy")

    def test_other_kinds_reject_errors(self):
        with pytest.raises(InputError, match="no error bars"):
            CurveSeries((1,), (0.5,), kind="pr", err=(0.1,))

    def test_as_dict(self):
        series = CurveSeries((1,), (0.5,), kind="per_degree_accuracy", err=(0.0,))
        assert series.as_dict() == {
            "kind": "per_degree_accuracy", "x": [1.0], "y": [0.5], "err": [0.0]
        }
        bare = CurveSeries((1,), (0.5,), kind="pr")
        assert "err" not in bare.as_dict()


class TestEvaluatePredictions:
    def test_graph_adds_degree_curves(self, path4, rng):
        y, y_hat, y_conf = random_triple(rng, 4)
        y[0] = 1  # the curve needs a positive
        report = evaluate_predictions(y, y_hat, y_conf, graph=path4, mode="F")
        data = report.as_dict()
        assert set(data["curves"]) == {
            "pr", "accuracy_at_percentile",
            "per_degree_accuracy", "per_degree_perplexity",
        }
        assert data["mode"] == "F"
        assert "neg_log_likelihood" in data["notes"]

    def test_without_graph_degree_curves_absent(self, rng):
        y, y_hat, y_conf = random_triple(rng, 6)
        y[0] = 1
        report = evaluate_predictions(y, y_hat, y_conf)
        data = report.as_dict()
        assert set(data["curves"]) == {"pr", "accuracy_at_percentile"}
        assert "mode" not in data

    def test_to_json_is_deterministic(self, path4, rng):
        y, y_hat, y_conf = random_triple(rng, 4)
        y[0] = 1
        one = evaluate_predictions(y, y_hat, y_conf, graph=path4).to_json()
        two = evaluate_predictions(y, y_hat, y_conf, graph=path4).to_json()
        assert one == two
        parsed = json.loads(one)  # valid JSON with sorted keys
        assert list(parsed) == sorted(parsed)


class TestWriteCurveCsv:
    def test_with_and_without_errors(self, tmp_path):
        with_err = CurveSeries((1, 2), (0.5, 0.75), kind="per_degree_accuracy",
                               err=(0.0, 0.125))
        path = tmp_path / "curve.csv"
        write_curve_csv(with_err, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines == ["x,y,err", "1.0,0.5,0.0", "2.0,0.75,0.125"]

        bare = CurveSeries((0.5,), (1.0,), kind="pr")
        write_curve_csv(bare, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines == ["x,y,err", "0.5,1.0,"]


def record_with(**overrides):
    base = dict(
        accuracy=0.5, rmse=0.3, precision=0.5, recall=0.5, f1=0.5, bcr=0.5,
        neg_log_likelihood=10.0, pct_pred_positive=0.5, pct_actual_positive=0.5,
    )
    base.update(overrides)
    return MetricsRecord(**base)


class TestFormatMetricsTable:
    def test_marks_best_per_direction(self):
        table = format_metrics_table({
            "F": record_with(accuracy=0.50, rmse=0.20),
            "X": record_with(accuracy=0.75, rmse=0.40),
        })
        lines = {line.split()[0]: line for line in table.splitlines()[2:]}
        accuracy = lines["accuracy"]
        assert "0.7500*" in accuracy and "0.5000*" not in accuracy
        rmse = lines["rmse"]  # lower is better
        assert "0.2000*" in rmse and "0.4000*" not in rmse

    def test_share_percentage_rows_unmarked(self):
        table = format_metrics_table({
            "F": record_with(pct_pred_positive=0.25),
            "X": record_with(pct_pred_positive=0.75),
        })
        lines = {line.split()[0]: line for line in table.splitlines()[2:]}
        assert "*" not in lines["pct_pred_positive"]
        assert "*" not in lines["pct_actual_positive"]

    def test_single_record_stars_every_directed_row(self):
        table = format_metrics_table({"only": record_with()})
        lines = {line.split()[0]: line for line in table.splitlines()[2:]}
        assert "*" in lines["bcr"] and "*" in lines["neg_log_likelihood"]

    def test_long_model_names_stay_aligned(self):
        name = "a-rather-long-model-name-indeed"
        table = format_metrics_table({name: record_with()})
        head = table.splitlines()[0]
        assert head.startswith("metric")
        assert head.endswith(name)

    def test_empty_mapping(self):
        with pytest.raises(InputError, match="at least one record"):
            format_metrics_table({})
