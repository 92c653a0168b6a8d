"""JSON results and a plain-text summary table."""
from __future__ import annotations

import json
from pathlib import Path

TIMING_KEYS = ("wall_s", "cpu_s")


def _is_timing(key: str) -> bool:
    return key.endswith(TIMING_KEYS)


def mask_timing(doc):
    """Copy of ``doc`` with every timing field set to None."""
    if isinstance(doc, dict):
        return {k: (None if _is_timing(k) else mask_timing(v)) for k, v in doc.items()}
    if isinstance(doc, list):
        return [mask_timing(v) for v in doc]
    return doc


def _fmt(v, spec: str) -> str:
    return "-" if v is None else format(v, spec)


def format_table(doc: dict) -> str:
    """One row per roster algorithm: search time, f calls, mean win rate."""
    header = f"{'algorithm':<20} {'wall s':>10} {'cpu s':>10} {'f calls':>10} {'win rate':>9} {'n inst':>6}"
    lines = [header, "-" * len(header)]
    for name, agg in doc["aggregates"].items():
        lines.append(f"{name:<20} {_fmt(agg['mean_wall_s'], '10.3f')} {_fmt(agg['mean_cpu_s'], '10.3f')} "
                     f"{_fmt(agg['mean_f_calls'], '10.1f')} {_fmt(agg['mean_win_rate'], '9.4f')} "
                     f"{agg['instances_complete']:>6}")
    if doc.get("stats"):
        lines += ["", "Welch t-tests on per-instance medians (alpha = 0.01)"]
        for s in doc["stats"]:
            flag = " *" if s["significant"] else ""
            extra = " (degenerate)" if s.get("degenerate") else ""
            lines.append(f"  {s['a']} vs {s['b']}: t={s['t']:.4f} df={s['df']:.2f} p={s['p']:.4g}{flag}{extra}")
    if doc.get("partial"):
        lines += ["", f"PARTIAL RESULTS: {doc.get('error')}"]
    lines += [""] + [f"note: {n}" for n in doc.get("notes", [])]
    return "\n".join(lines) + "\n"


def emit_report(result, stats, path, masked: bool = False) -> dict:
    """Write ``path`` (JSON) and ``path`` with a .txt suffix (table).

    ``result`` is an ExperimentResult or its dict form; ``stats`` a list of
    Welch entries (dicts or WelchResult). Returns the JSON document.
    """
    doc = result if isinstance(result, dict) else result.to_dict()
    doc = dict(doc)
    doc["stats"] = [s if isinstance(s, dict) else s.to_dict() for s in stats]
    if masked:
        doc = mask_timing(doc)
    path = Path(path)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    path.with_suffix(".txt").write_text(format_table(doc), encoding="utf-8")
    return doc


def load_report(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
