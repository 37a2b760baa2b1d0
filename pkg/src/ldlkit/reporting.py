"""CSV and figure emission for the batch commands.

Every file is written to a temporary name and atomically renamed, so a
failed run never leaves partial outputs.  CSV floats use shortest
round-trip formatting, which makes byte-identical reruns possible.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from . import __version__  # noqa: E402


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def atomic_write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: Path, header: list[str], rows, meta: dict | None = None):
    lines = []
    for key, value in (meta or {}).items():
        lines.append(f"# meta: {key}={value}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    atomic_write_text(Path(path), "\n".join(lines) + "\n")


def standard_meta(config, seed, command) -> dict:
    return {
        "tool": f"ldlkit {__version__}",
        "command": command,
        "config_sha256": config.digest,
        "seed": seed,
    }


def save_figure(fig, path: Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def figure_gamma(energies, gamma0, gamma1, w0, w1, path: Path):
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax1.plot(energies, np.real(gamma0), label="Re gamma_0")
    ax1.plot(energies, np.imag(gamma0), label="Im gamma_0", ls="--")
    ax1.plot(energies, np.real(gamma1), label="Re gamma_1")
    ax1.plot(energies, np.imag(gamma1), label="Im gamma_1", ls="--")
    ax1.set_ylabel("gamma_eps(E)")
    ax1.legend(fontsize=8)
    ax2.plot(energies, w0, label="w_0")
    ax2.plot(energies, w1, label="w_1")
    ax2.set_xlabel("E")
    ax2.set_ylabel("w_eps(E)")
    ax2.legend(fontsize=8)
    save_figure(fig, path)


def figure_decay(times, norms, entries, path: Path):
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(times, norms, "k-", lw=2, label="||exp(-Gamma t)||")
    for label, series in entries.items():
        ax.plot(times, np.abs(series), ls="--", lw=1, label=f"|{label}|")
    ax.set_xlabel("t")
    ax.set_ylabel("decay")
    ax.legend(fontsize=8)
    save_figure(fig, path)


def figure_prelimit(sweeps: dict, path: Path):
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, rows in sweeps.items():
        lams = [r["lambda"] for r in rows]
        errs = [max(r["abs_error"], 1e-18) for r in rows]
        ax.loglog(lams, errs, "o-", label=label)
    ax.invert_xaxis()
    ax.set_xlabel("lambda")
    ax.set_ylabel("|I_lambda - I_limit|")
    ax.legend(fontsize=8)
    save_figure(fig, path)


def figure_scatter(dyn_elements, spec_elements, path: Path):
    fig, ax = plt.subplots(figsize=(5, 5))
    d = dyn_elements.ravel()
    s = spec_elements.ravel()
    lim = max(np.abs(d).max(), np.abs(s).max(), 1e-12)
    ax.plot(np.abs(s), np.abs(d), "o")
    ax.plot([0, lim], [0, lim], "k--", lw=1)
    ax.set_xlabel("|spectral element|")
    ax.set_ylabel("|dynamic element|")
    save_figure(fig, path)


def figure_check(results: list[dict], path: Path):
    fig, ax = plt.subplots(figsize=(7, 0.4 * len(results) + 1.5))
    names = [r["name"] for r in results]
    ok = [1.0 if r["passed"] else 0.0 for r in results]
    colors = ["tab:green" if r["passed"] else "tab:red" for r in results]
    ax.barh(range(len(names)), ok, color=colors)
    ax.set_yticks(range(len(names)))
    ax.set_yticklabels(names, fontsize=8)
    ax.set_xlim(0, 1.2)
    ax.set_xticks([])
    for i, r in enumerate(results):
        ax.text(1.02, i, "pass" if r["passed"] else "FAIL", fontsize=8,
                va="center")
    save_figure(fig, path)
