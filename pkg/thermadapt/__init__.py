"""Self-adaptive HVAC control with real-time deep Q-learning agents.

.. automodule:: thermadapt.thermal
.. automodule:: thermadapt.forecasting
.. automodule:: thermadapt.neural
.. automodule:: thermadapt.agent
.. automodule:: thermadapt.knowledge
.. automodule:: thermadapt.adaptation
.. automodule:: thermadapt.scenario
.. automodule:: thermadapt.driver
"""

__version__ = "2026.1"
