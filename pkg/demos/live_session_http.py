"""Drive an elicitation session over the HTTP API.

Starts the service in-process, creates a simulated session, answers queries
the way the browser client would (POST /answer with the pending query index),
and prints the shrinking regret bound.  Run `irmdp serve --static-dir
frontend/dist` to use the interactive browser client instead.
"""

import json
import threading
import urllib.request

from irmdp.server import make_server

server = make_server(host="127.0.0.1", port=0)
threading.Thread(target=server.serve_forever, daemon=True).start()
base = f"http://127.0.0.1:{server.server_address[1]}"


def call(method, path, body=None):
    data = None if body is None else json.dumps(body).encode()
    req = urllib.request.Request(base + path, data=data, method=method)
    with urllib.request.urlopen(req) as resp:
        return json.loads(resp.read())


view = call("POST", "/api/sessions", {
    "generator": {"type": "random", "n": 6, "k": 3, "seed": 5, "width_scale": 3.0},
    "criterion": "mmr",
    "strategy": "cs",
    "solver_mode": "exact",
    "mode": "simulated",
})
print(f"session {view['id']}: baseline regret {view['trace'][0]['mmr']:.4f}")

# A simulated session knows its hidden reward server-side; the client still
# answers explicitly, exactly like a human would through the UI.
from irmdp import BoundQuery, SimulatedUser, gen_random, RandomMdpSpec, simulate_response
import numpy as np

_, _, r_true = gen_random(RandomMdpSpec(n=6, k=3, seed=5, width_scale=3.0))
user = SimulatedUser(r_true)

while not view["terminal"]:
    q = view["current_query"]
    resp = simulate_response(user, BoundQuery(q["s"], q["a"], q["b"], q["epsilon"]))
    view = call("POST", f"/api/sessions/{view['id']}/answer",
                {"response": resp.value, "query_index": q["query_index"]})
    row = view["trace"][-1]
    print(f"  q{row['query_index']:>3}: is r({q['s']},{q['a']}) >= {q['b']:.3f}? "
          f"{resp.value:<7} regret {row['mmr']:.5f}")

print(f"terminated ({view['terminated_reason']}) after {view['query_count']} queries; "
      f"certified: {view['certified']}")
server.shutdown()
