"""
File import/export for scenarios, link tables, associations and solver traces.

CSV files are written with the standard ``csv`` module, spreadsheets with
openpyxl. Floats are written in their shortest round-trip form so reruns with
identical inputs produce identical bytes.
"""

import csv
import json
import logging
from pathlib import Path

import numpy as np
from openpyxl import Workbook

from .association import Association
from .exceptions import InvalidConfigError

logger = logging.getLogger(__name__)

LINK_HEADER = ['user_id', 'bs_id', 'gain', 'sinr_db', 'rate_bps_hz']
ASSOCIATION_HEADER = ['user_id', 'bs_id', 'weight']
DUAL_TRACE_HEADER = ['iter', 'dual_value', 'stepsize', 'epsilon', 'max_imbalance', 'primal_utility']
DUAL_PRICE_HEADER = ['bs_id', 'tier', 'mu', 'supply', 'demand', 'best_mu', 'best_demand']
JOINT_HEADER = ['user_id', 'bs_id', 'y', 'user_rate']
FW_TRACE_HEADER = ['iter', 'utility', 'fw_gap', 'step']


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
    logger.debug("Wrote %s", path)
    return path


def write_json(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + '\n', encoding='utf-8')
    logger.debug("Wrote %s", path)
    return path


def write_workbook(path, sheets):
    """
    Save ``{sheet title: (header, rows)}`` as one .xlsx workbook.
    """
    workbook = Workbook()
    workbook.remove(workbook.active)
    for title, (header, rows) in sheets.items():
        sheet = workbook.create_sheet(title=title[:31])
        sheet.append(list(header))
        for row in rows:
            sheet.append(list(row))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    workbook.save(path)
    return path


def export_scenario(scenario, path):
    return write_json(path, scenario.to_dict())


def export_links(links, path):
    return write_csv(path, LINK_HEADER, links.rows())


def export_association(assoc, path):
    return write_csv(path, ASSOCIATION_HEADER, assoc.rows())


def import_association(path, n_users, n_bs):
    """
    Read an association CSV (user_id, bs_id, weight) back into an ``Association``.

    Users missing from the file, ids out of range or rows that do not sum to
    one raise ``InvalidConfigError``.
    """
    weights = np.zeros((n_users, n_bs))
    path = Path(path)
    with path.open(newline='', encoding='utf-8') as handle:
        reader = csv.DictReader(handle)
        missing = set(ASSOCIATION_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise InvalidConfigError(f"{path.name}: missing columns {sorted(missing)}.")
        for line, row in enumerate(reader, start=2):
            try:
                i, j, w = int(row['user_id']), int(row['bs_id']), float(row['weight'])
            except (TypeError, ValueError):
                raise InvalidConfigError(f"{path.name}:{line}: malformed row {row}.")
            if not (0 <= i < n_users and 0 <= j < n_bs):
                raise InvalidConfigError(f"{path.name}:{line}: user {i} / BS {j} out of range.")
            weights[i, j] += w
    try:
        return Association(weights)
    except ValueError as exc:
        raise InvalidConfigError(f"{path.name}: {exc}")


def dual_trace_rows(trace):
    for record in trace:
        yield (record.iteration, record.dual_value, record.stepsize, record.epsilon,
               record.max_imbalance, record.primal_utility)


def export_dual_trace(trace, path):
    return write_csv(path, DUAL_TRACE_HEADER, dual_trace_rows(trace))


def export_dual_prices(result, links, path):
    """Final per-BS prices, plus the prices at the best dual value that feed the rate bias."""
    state = result.state
    zeros = np.zeros(links.n_bs)
    demand = state.demand if state.demand is not None else zeros
    best_mu = state.best_mu if state.best_mu is not None else state.mu
    best_demand = state.best_demand if state.best_demand is not None else zeros
    rows = (
        (j, int(links.bs_tiers[j]), float(state.mu[j]), float(state.supply[j]), float(demand[j]),
         float(best_mu[j]), float(best_demand[j]))
        for j in range(links.n_bs)
    )
    return write_csv(path, DUAL_PRICE_HEADER, rows)


def export_joint(solution, path):
    return write_csv(path, JOINT_HEADER, solution.rows())


def export_fw_trace(trace, path):
    """Frank-Wolfe trace of the FUA or joint solver."""
    rows = ((step.iteration, step.utility, step.gap, step.step) for step in trace)
    return write_csv(path, FW_TRACE_HEADER, rows)
