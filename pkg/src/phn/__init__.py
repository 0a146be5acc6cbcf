"""phn: closed-loop personal heart-health navigation.

Layers, bottom to top: ``kernels`` (compiled/pure numeric core),
``ingest`` (minute streams to events and features), ``hse`` +
``knowledge`` (health-state estimation over bank tables),
``statespace`` (personal state graph), ``trainload`` (TRIMP/CTL/ATL/
TSB), ``guidance`` (routing and the daily controller), ``responder``
(exercise-response classification), ``sim`` (closed-loop harness),
``store``/``api``/``cli`` (persistence and interfaces).
"""

__version__ = "0.1.0"
