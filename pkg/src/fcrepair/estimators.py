"""Estimator-style wrappers: fit on an event log, transform a net."""

from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .conformance import precision
from .petri_net import DEFAULT_MAX_STATES
from .regions import DEFAULT_ESSP_BUDGET, DEFAULT_SYNTHESIS_BUDGET, synthesize
from .repair import repair
from .transition_system import build_prefix_tree, minimize
from .validation import check_event_log, check_net_system, check_positive


class FreeChoiceRepair(BaseEstimator):
    """Learns the minimal TS of a log, then adds constraint places to nets.

    >>> est = FreeChoiceRepair().fit(log)          # doctest: +SKIP
    >>> repaired = est.transform(net_sys)          # doctest: +SKIP
    >>> est.report_.added_places                   # doctest: +SKIP
    """

    def __init__(self, essp_budget=DEFAULT_ESSP_BUDGET, max_states=DEFAULT_MAX_STATES, metrics=True, theorem4_check=False):
        self.essp_budget = essp_budget
        self.max_states = max_states
        self.metrics = metrics
        self.theorem4_check = theorem4_check

    def fit(self, X, y=None):
        check_positive(self.essp_budget, "essp_budget")
        check_positive(self.max_states, "max_states")
        self.log_ = check_event_log(X)
        self.ts_ = minimize(build_prefix_tree(self.log_))
        return self

    def transform(self, net_sys):
        check_is_fitted(self, "log_")
        net_sys = check_net_system(net_sys, require_free_choice=True, require_workflow=True)
        repaired, self.report_ = repair(
            net_sys,
            self.log_,
            self.essp_budget,
            self.max_states,
            metrics=self.metrics,
            theorem4_check=self.theorem4_check,
        )
        return repaired

    def fit_transform(self, X, net_sys):
        return self.fit(X).transform(net_sys)

    def score(self, net_sys):
        """Entropy precision of ``net_sys`` against the fitted log."""
        check_is_fitted(self, "log_")
        return precision(check_net_system(net_sys), self.log_, self.max_states).precision


class RegionSynthesizer(BaseEstimator):
    """Synthesizes a net from the minimal TS of a log, one place per minimal region."""

    def __init__(self, budget=DEFAULT_SYNTHESIS_BUDGET):
        self.budget = budget

    def fit(self, X, y=None):
        check_positive(self.budget, "budget")
        self.log_ = check_event_log(X)
        self.ts_ = minimize(build_prefix_tree(self.log_))
        self.net_ = synthesize(self.ts_, self.budget)
        return self

    def predict(self, X=None):
        check_is_fitted(self, "net_")
        return self.net_

    def fit_predict(self, X, y=None):
        return self.fit(X).net_
