"""fastiiot — a framework and CLI for rapid IIoT microservice development.

Typed messages over a publish/subscribe broker, template-based project
scaffolding, and compilation of declarative deployment configurations into
container-orchestration files.
"""

__version__ = "0.1.0"
