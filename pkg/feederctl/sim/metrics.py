"""Metrics computed from a SimLog."""

import logging
from typing import Dict, List, Optional

import numpy as np

from .log import SimLog

logger = logging.getLogger(__name__)

_EPS = 1e-9


def settling_time(
    log: SimLog,
    channel: str,
    band: float,
    start: Optional[float] = None,
    end: Optional[float] = None,
    target: Optional[float] = None,
) -> Optional[float]:
    """
    Time after `start` at which a channel enters ±band around its final value for good.

    Args:
        start: Window start (s); defaults to the last reference change
        end: Window end (s, exclusive); defaults to the end of the log
        target: Band centre; defaults to the last value inside the window

    Returns:
        Seconds relative to `start`, 0.0 if the channel never leaves the
        band, None if it settles only at the last sample of the window
    """
    if band <= 0:
        raise ValueError("band must be positive")
    if len(log) == 0:
        raise ValueError("log is empty")
    t = log.time
    values = log.column(channel)
    if start is None:
        changes = log.metadata.get("reference_change_times") or [float(t[0])]
        start = float(changes[-1])
    mask = t >= start - _EPS
    if end is not None:
        mask &= t < end - _EPS
    t = t[mask]
    values = values[mask]
    if len(values) == 0:
        return None
    centre = values[-1] if target is None else target
    outside = np.flatnonzero(np.abs(values - centre) > band)
    if len(outside) == 0:
        return 0.0
    last = int(outside[-1])
    if last >= len(values) - 2:
        return None
    return float(t[last + 1] - start)


def _event_rows(log: SimLog, event_index: int) -> Optional[tuple]:
    events = log.metadata.get("disturbances") or []
    if event_index >= len(events):
        return None
    event = events[event_index]
    t = log.time
    before = np.flatnonzero(t < event["time_on_s"] - _EPS)
    if event.get("time_off_s") is not None:
        after = np.flatnonzero(t < event["time_off_s"] - _EPS)
    else:
        after = np.arange(len(t))
    if len(before) == 0 or len(after) == 0 or after[-1] <= before[-1]:
        return None
    return int(before[-1]), int(after[-1])


def _resettled(log: SimLog, series: np.ndarray, row: int, total_change: float, window_s: float = 1.0) -> bool:
    t = log.time
    window = (t > t[row] - window_s - _EPS) & (t <= t[row] + _EPS)
    variation = float(np.ptp(series[window]))
    return variation <= 0.01 * abs(total_change)


def der_participation(log: SimLog, event_index: int = 0) -> Optional[Dict[str, float]]:
    """
    Per-DER share of the steady-state change in active output caused by a disturbance.

    Compares the last row before the event switches on with the last row
    before it switches off (or the end of the log).
    """
    rows = _event_rows(log, event_index)
    if rows is None:
        return None
    pre, post = rows
    ders = sorted(log.metadata.get("der_area", {}))
    if not ders:
        return None
    outputs = {der: log.column(f"der_{der}_p_w") for der in ders}
    changes = {der: float(values[post] - values[pre]) for der, values in outputs.items()}
    total = sum(changes.values())
    if abs(total) < _EPS:
        return None
    summed = np.sum(np.vstack(list(outputs.values())), axis=0)
    if not _resettled(log, summed, post, total):
        logger.warning(f"Disturbance {event_index}: DER outputs did not re-settle before the event ended")
        return None
    return {der: change / total for der, change in changes.items()}


def locality_metric(log: SimLog, event_index: int = 0) -> Optional[Dict[str, float]]:
    """
    Per-area share of the steady-state compensation of a disturbance.

    Returns:
        {area: fraction} summing to one, or None without an event, without a
        response, or when the run did not re-settle
    """
    shares = der_participation(log, event_index)
    if shares is None:
        return None
    der_area = log.metadata["der_area"]
    fractions = {area: 0.0 for area in log.metadata.get("areas", sorted(set(der_area.values())))}
    for der, share in shares.items():
        fractions[der_area[der]] += share
    return fractions


def tracking_error_before_changes(log: SimLog, channel: str = "dp0_w", reference: str = "ref_dp_w") -> float:
    """Largest |channel − reference| on the row before each reference change and on the last row."""
    t = log.time
    error = np.abs(log.column(channel) - log.column(reference))
    rows = set()
    for change in log.metadata.get("reference_change_times", []):
        before = np.flatnonzero(t < change - _EPS)
        if len(before):
            rows.add(int(before[-1]))
    rows.add(len(t) - 1)
    return float(max(error[row] for row in rows))


def steady_state_violations(log: SimLog, window_s: float = 1.0) -> Dict[str, float]:
    """Largest logged limit violation per area over the final window."""
    t = log.time
    window = t >= t[-1] - window_s - _EPS
    return {column: float(np.max(log.column(column)[window])) for column in log.columns_like("viol_")}


def _segments(log: SimLog) -> List[tuple]:
    """(start, end) windows after each reference change, cut at the next change or disturbance edge."""
    edges = set(log.metadata.get("reference_change_times", []))
    for event in log.metadata.get("disturbances", []):
        edges.add(event["time_on_s"])
        if event.get("time_off_s") is not None:
            edges.add(event["time_off_s"])
    edges = sorted(edges)
    segments = []
    for change in log.metadata.get("reference_change_times", []):
        later = [edge for edge in edges if edge > change + _EPS]
        segments.append((change, later[0] if later else None))
    return segments


def build_summary(log: SimLog, band_w: float = 1000.0) -> str:
    """Human-readable run report."""
    meta = log.metadata
    lines = [
        "SIMULATION SUMMARY",
        "=" * 50,
        f"Scenario: {meta.get('scenario')}",
        f"Plant: {meta.get('plant')}",
        f"Sampling period: {meta.get('sampling_period_s')} s, dt: {meta.get('dt_s')} s",
        f"Areas: {', '.join(meta.get('areas', []))}",
    ]
    overrides = meta.get("overrides") or []
    if overrides:
        lines.append("Overrides:")
        for key, value in overrides:
            lines.append(f"  {key}={value}")
    else:
        lines.append("Overrides: none")
    lines.append(f"Rows: {len(log)}")
    if log.aborted:
        lines.append(f"ABORTED at t={meta.get('abort_time_s')} s: {meta.get('abort_reason')}")
    lines.append("")

    if len(log):
        segments = _segments(log)
        if 0 < len(segments) <= 10:
            lines.append(f"Settling of dp0_w (band ±{band_w:g} W):")
            for start, end in segments:
                value = settling_time(log, "dp0_w", band_w, start=start, end=end)
                text = f"{value:.2f} s" if value is not None else "not settled"
                lines.append(f"  change at {start:g} s: {text}")
        lines.append(f"Tracking error before reference changes: {tracking_error_before_changes(log):.1f} W")
        final = log.frame.iloc[-1]
        lines.append(f"Final dp0_w: {final['dp0_w']:.1f} W (reference {final['ref_dp_w']:.1f} W)")
        lines.append("")

        lines.append("Steady-state violations (last 1 s):")
        for column, value in steady_state_violations(log).items():
            lines.append(f"  {column}: {value:.6g}")
        lines.append("")

        for k, event in enumerate(meta.get("disturbances", [])):
            fractions = locality_metric(log, k)
            lines.append(f"Disturbance {k} at bus {event['bus']} ({event['p_w']:g} W from {event['time_on_s']:g} s):")
            if fractions is None:
                lines.append("  participation: undefined")
            else:
                for area, share in fractions.items():
                    lines.append(f"  {area}: {100.0 * share:.1f}%")
        if meta.get("disturbances"):
            lines.append("")

    final_duals = meta.get("final_duals") or {}
    if final_duals:
        lines.append("Final duals:")
        for area, duals in final_duals.items():
            lines.append(f"  {area}: " + ", ".join(f"{value:.4g}" for value in duals))
    faults = {area: count for area, count in (meta.get("faults") or {}).items() if count}
    if faults:
        lines.append(f"Controller faults: {faults}")
    return "\n".join(lines) + "\n"
