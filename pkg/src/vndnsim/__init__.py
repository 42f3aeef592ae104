"""Deterministic discrete-event simulator for NDN forwarding over roadside Wi-Fi.

The package is split along the natural seams of the system: ``ndn`` holds the
forwarding core (names, tables, pipeline, deployment modes), ``wireless`` the
abstracted Wi-Fi link layer, ``mobility`` the avenue traffic model, ``simkit``
the scenario runner, ``stats`` the metrics and comparison machinery, and
``cli`` the command-line front end.
"""

__version__ = "0.1.0"
