"""Reference scorer for the client round-trip test.

Reads a JSON array of score requests on stdin, scores them directly with
the library's score_batch (no wire protocol involved), and prints the
responses as a JSON array.
"""

import json
import sys

from neurosym.service import ScoreRequest, score_batch

requests = [ScoreRequest.model_validate(obj) for obj in json.load(sys.stdin)]
responses = score_batch(requests)
print(json.dumps([json.loads(r.model_dump_json()) for r in responses]))
