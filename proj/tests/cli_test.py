#!/usr/bin/env python3
"""Drives the privloc binary as a user would: keygen, a TCP stack, reports, bad input."""

import csv
import json
import os
import re
import signal
import socket
import subprocess
import sys
import tempfile
import threading
import unittest

CLI = sys.argv.pop(1) if len(sys.argv) > 1 else "build/tools/privloc"
ENV = {k: v for k, v in os.environ.items() if not k.startswith("PRIVLOC_")}


def run(*args, check=True, **kw):
    p = subprocess.run([CLI, *args], capture_output=True, text=True, env=kw.pop("env", ENV), timeout=300, **kw)
    if check and p.returncode != 0:
        raise AssertionError(f"{args} exited {p.returncode}: {p.stderr}")
    return p


def start(*args):
    p = subprocess.Popen([CLI, *args], stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True, env=ENV)
    line = p.stdout.readline()
    m = re.search(r"port (\d+)", line)
    if not m:
        p.kill()
        raise AssertionError(f"{args}: no port line, got {line!r} / {p.stderr.read()}")
    return p, int(m.group(1))


class Client:
    def __init__(self, port, auth=None):
        self.sock = socket.create_connection(("127.0.0.1", port), timeout=10)
        self.reader = self.sock.makefile("r")
        self.auth = auth
        self.next_id = 1

    def call(self, type_, body):
        msg = {"type": type_, "id": self.next_id, "body": body}
        if self.auth:
            msg["auth"] = self.auth
        self.next_id += 1
        self.sock.sendall((json.dumps(msg) + "\n").encode())
        return json.loads(self.reader.readline())

    def close(self):
        self.sock.close()


def pt(x, y):
    return {"x": x, "y": y}


class CliTest(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def test_keygen(self):
        out = os.path.join(self.dir, "k.hex")
        run("keygen", "--lambda", "128", "--out", out)
        with open(out) as f:
            lines = f.read().split()
        self.assertEqual(len(lines), 3)
        for ln in lines:
            self.assertRegex(ln, r"^[0-9a-f]{32}$")
        self.assertEqual(len(set(lines)), 3)
        self.assertNotEqual(run("keygen", "--lambda", "0", "--out", out, check=False).returncode, 0)

    def test_keygen_env_default(self):
        out = os.path.join(self.dir, "env.hex")
        run("keygen", env={**ENV, "PRIVLOC_KEYS": out})
        self.assertTrue(os.path.exists(out))

    def test_blowup_report(self):
        p = run("--out-dir", self.dir, "--seed", "9", "blowup", "--count", "10000", "--side-ratio", "0.5")
        with open(os.path.join(self.dir, "blowup.json")) as f:
            res = json.load(f)
        self.assertEqual(json.loads(p.stdout), res)
        self.assertEqual(res["subscriptions"], 10000)
        self.assertAlmostEqual(res["total"], 6.75, delta=0.15)
        self.assertAlmostEqual(res["mean_per_backend"], 2.25, delta=0.05)

    def test_config_file_and_flag_precedence(self):
        cfg = os.path.join(self.dir, "cfg.json")
        with open(cfg, "w") as f:
            json.dump({"seed": 5, "blowup": {"count": 300, "side_ratio": 0.25}}, f)
        res = json.loads(run("--config", cfg, "--out-dir", self.dir, "blowup").stdout)
        self.assertEqual(res["subscriptions"], 300)
        self.assertEqual(res["seed"], 5)
        self.assertEqual(res["side"], 25)
        res = json.loads(run("--config", cfg, "--out-dir", self.dir, "--seed", "6", "blowup", "--count", "50").stdout)
        self.assertEqual((res["subscriptions"], res["seed"], res["side"]), (50, 6, 25))
        env = {**ENV, "PRIVLOC_CONFIG": cfg}
        res = json.loads(run("--out-dir", self.dir, "blowup", env=env).stdout)
        self.assertEqual(res["subscriptions"], 300)

    def test_bad_config_fails(self):
        bad = os.path.join(self.dir, "bad.json")
        with open(bad, "w") as f:
            f.write("{nope")
        p = run("--config", bad, "blowup", check=False)
        self.assertNotEqual(p.returncode, 0)
        self.assertIn("config", p.stderr)
        tile = os.path.join(self.dir, "tile.json")
        with open(tile, "w") as f:
            json.dump({"params": {"tile_len": 0}}, f)
        p = run("--config", tile, "blowup", check=False)
        self.assertNotEqual(p.returncode, 0)
        self.assertIn("tile_len", p.stderr)
        p = run("--config", os.path.join(self.dir, "missing.json"), "blowup", check=False)
        self.assertNotEqual(p.returncode, 0)
        self.assertNotEqual(run("priv-game", "--trials", "5", check=False).returncode, 0)
        self.assertNotEqual(run("bench", "--clients", "300", check=False).returncode, 0)
        self.assertNotEqual(run("no-such-command", check=False).returncode, 0)

    def test_simulate_writes_jsonl(self):
        run("--out-dir", self.dir, "--seed", "3", "simulate", "--clients", "4", "--events", "400", "--ratio", "19:1")
        with open(os.path.join(self.dir, "workload.jsonl")) as f:
            lines = [json.loads(ln) for ln in f]
        self.assertEqual(len(lines), 400)
        subs = sum(1 for e in lines if e["kind"] == "subscribe")
        self.assertTrue(5 <= subs <= 40, subs)

    def test_bench_csv(self):
        run("--out-dir", self.dir, "bench", "--clients", "1,4", "--ops", "200", "--repetitions", "3")
        with open(os.path.join(self.dir, "bench.csv")) as f:
            rows = list(csv.DictReader(f))
        self.assertEqual([r["clients"] for r in rows], ["1", "4"])
        for r in rows:
            self.assertGreater(float(r["throughput_ops_s"]), 0)
            self.assertEqual(r["repetitions"], "3")
            self.assertEqual(r["errors"], "0")
        self.assertTrue(os.path.getsize(os.path.join(self.dir, "bench_plot.dat")) > 0)
        with open(os.path.join(self.dir, "bench.json")) as f:
            res = json.load(f)
        self.assertIn("ratio", res["overhead"])

    def test_priv_game_crippled(self):
        p = run("--out-dir", self.dir, "--seed", "17", "priv-game", "--trials", "300", "--crippled")
        res = json.loads(p.stdout)
        self.assertTrue(res["config"]["crippled"])
        self.assertGreater(res["advantage"], 0.6)

    def test_fidelity_affine(self):
        p = run("--out-dir", self.dir, "fidelity", "--moves", "300", "--geofences", "100", "--modes", "affine")
        rep = json.loads(p.stdout)["reports"][0]
        self.assertEqual(rep["ope_mode"], "affine")
        self.assertEqual(rep["false_positives"] + rep["false_negatives"], 0)

    def test_tcp_stack(self):
        keys = os.path.join(self.dir, "keys.hex")
        run("keygen", "--out", keys)
        procs = []
        try:
            ports = []
            for _ in range(3):
                p, port = start("backend", "--port", "0", "--auth", "bk-secret", "--log-level", "off")
                procs.append(p)
                ports.append(port)
            # Listener for callback notifications.
            listener = socket.socket()
            listener.bind(("127.0.0.1", 0))
            listener.listen()
            listener.settimeout(10)
            got = []

            def accept():
                conn, _ = listener.accept()
                got.append(conn.makefile("r").readline())
                conn.close()

            t = threading.Thread(target=accept)
            t.start()
            backends = ",".join(f"tcp://127.0.0.1:{p}" for p in ports)
            gw, gport = start("gateway", "--port", "0", "--keys", keys, "--backends", backends,
                              "--auth", "cl-secret", "--backend-auth", "bk-secret", "--log-level", "off")
            procs.append(gw)

            denied = Client(gport)
            self.assertEqual(denied.call("flush", {})["type"], "error")
            denied.close()

            c = Client(gport, auth="cl-secret")
            cb = f"tcp://127.0.0.1:{listener.getsockname()[1]}"
            r = c.call("subscribe", {"sub_id": "fence", "box": {"sw": pt(400, 400), "ne": pt(450, 450)}, "callback": cb})
            self.assertEqual(r["type"], "ack", r)
            self.assertEqual(c.call("flush", {})["type"], "ack")
            r = c.call("publish", {"node_id": "n1", "start": pt(390, 420), "end": pt(410, 420), "ts": 7})
            self.assertEqual(r["type"], "ack", r)
            r = c.call("publish", {"node_id": "n1", "start": pt(10, 10), "end": pt(90, 10), "ts": 8})
            self.assertEqual(r["type"], "error")
            self.assertEqual(r["body"]["code"], "distance_violation")
            c.close()
            t.join(15)
            self.assertEqual(len(got), 1)
            note = json.loads(got[0])
            self.assertEqual(note["type"], "notify")
            self.assertEqual(note["body"]["sub_id"], "fence")
            self.assertEqual(note["body"]["node_id"], "n1")
            listener.close()
        finally:
            for p in reversed(procs):
                p.send_signal(signal.SIGTERM)
            for p in procs:
                self.assertEqual(p.wait(timeout=20), 0)
                p.stdout.close()
                p.stderr.close()


if __name__ == "__main__":
    unittest.main(verbosity=2)
