import csv
import json
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from openpyxl import load_workbook

from hetnet.association import Association
from hetnet.dual_solver import run_dual
from hetnet.exceptions import InvalidConfigError
from hetnet.exporters import (
    DUAL_PRICE_HEADER,
    DUAL_TRACE_HEADER,
    FW_TRACE_HEADER,
    JOINT_HEADER,
    export_association,
    export_dual_prices,
    export_dual_trace,
    export_fw_trace,
    export_joint,
    export_links,
    export_scenario,
    import_association,
    write_workbook,
)
from hetnet.fua_solver import solve_fua
from hetnet.joint_solver import solve_joint
from hetnet.topology import LinkTable, compute_link_table, generate_scenario

from .utils import random_links, small_scenario_config


def read_rows(path):
    with Path(path).open(newline='') as handle:
        return list(csv.reader(handle))


class ExportersTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_scenario_and_links(self):
        scenario = generate_scenario(small_scenario_config(), seed=1)
        links = compute_link_table(scenario)
        data = json.loads(export_scenario(scenario, self.out / 'scenario.json').read_text())
        self.assertEqual(len(data['base_stations']), 26)
        self.assertEqual(len(data['users']), 12)
        rows = read_rows(export_links(links, self.out / 'links.csv'))
        self.assertEqual(rows[0], ['user_id', 'bs_id', 'gain', 'sinr_db', 'rate_bps_hz'])
        self.assertEqual(len(rows), 1 + 12 * 26)

    def test_association_reimports(self):
        assoc = Association(np.array([[0.25, 0.75], [1.0, 0.0], [0.0, 1.0]]))
        path = export_association(assoc, self.out / 'association.csv')
        np.testing.assert_array_equal(import_association(path, 3, 2).weights, assoc.weights)

    def test_import_rejects_bad_files(self):
        path = self.out / 'bad.csv'
        path.write_text('user_id,bs_id\n0,0\n')
        with self.assertRaises(InvalidConfigError):
            import_association(path, 1, 1)
        path.write_text('user_id,bs_id,weight\n0,3,1.0\n')
        with self.assertRaises(InvalidConfigError):
            import_association(path, 1, 2)
        path.write_text('user_id,bs_id,weight\n0,0,0.5\n')
        with self.assertRaises(InvalidConfigError):
            import_association(path, 1, 2)
        path.write_text('user_id,bs_id,weight\n0,zero,1\n')
        with self.assertRaises(InvalidConfigError):
            import_association(path, 1, 2)

    def test_dual_trace_and_prices(self):
        rng = np.random.default_rng(0)
        links = random_links(rng, 8, 3, bs_tiers=[0, 1, 1])
        result = run_dual(links, max_iter=30)
        rows = read_rows(export_dual_trace(result.trace, self.out / 'dual_trace.csv'))
        self.assertEqual(rows[0], DUAL_TRACE_HEADER)
        self.assertEqual(len(rows), 1 + len(result.trace))
        prices = read_rows(export_dual_prices(result, links, self.out / 'dual_prices.csv'))
        self.assertEqual(prices[0], DUAL_PRICE_HEADER)
        self.assertEqual([row[1] for row in prices[1:]], ['0', '1', '1'])

    def test_fw_trace(self):
        rng = np.random.default_rng(1)
        solution = solve_fua(random_links(rng, 6, 3), max_iter=50)
        rows = read_rows(export_fw_trace(solution.trace, self.out / 'fua_trace.csv'))
        self.assertEqual(rows[0], FW_TRACE_HEADER)
        self.assertEqual(len(rows), 1 + len(solution.trace))

    def test_joint_rows(self):
        solution = solve_joint(LinkTable.from_rates([[1.0, 2.0]]))
        rows = read_rows(export_joint(solution, self.out / 'joint.csv'))
        self.assertEqual(rows[0], JOINT_HEADER)
        self.assertEqual([row[:2] for row in rows[1:]], [['0', '0'], ['0', '1']])
        self.assertEqual(float(rows[1][3]), 3.0)

    def test_workbook_sheets(self):
        path = write_workbook(self.out / 'book.xlsx', {
            'loads': (['scheme', 'load'], [('fua', 1.5)]),
            'empty': (['kind'], []),
        })
        workbook = load_workbook(path)
        self.assertEqual(workbook.sheetnames, ['loads', 'empty'])
        self.assertEqual(workbook['loads']['B2'].value, 1.5)
