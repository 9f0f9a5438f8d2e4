"""Run manifests: config snapshot, file hashes, seeds, versions, timings.

Every CLI command is a pure function of (input files, config, seeds); the
manifest makes that checkable by hash.
"""

import hashlib
import json
import platform
import sys
import time

from . import __version__


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


class ManifestWriter:
    def __init__(self, command, cfg):
        self.started = time.time()
        self.data = {
            "command": command,
            "config": cfg.to_json_dict(),
            "inputs": {},
            "outputs": {},
            "versions": {
                "t1rho_inr": __version__,
                "python": sys.version.split()[0],
                "platform": platform.platform(),
            },
        }
        import numpy

        self.data["versions"]["numpy"] = numpy.__version__

    def add_input(self, path):
        self.data["inputs"][str(path)] = sha256_file(path)

    def add_output(self, path):
        self.data["outputs"][str(path)] = sha256_file(path)

    def add_note(self, key, value):
        self.data[key] = value

    def write(self, path):
        self.data["elapsed_s"] = round(time.time() - self.started, 3)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.data, f, indent=2, sort_keys=True)
            f.write("\n")
        return path
