"""
Logging + OpenTelemetry setup.

Call setup_observability() once from an entry point, before running any
experiment. Spans go to an OTLP collector when OTEL_EXPORTER_OTLP_ENDPOINT
is set, to stdout when RANKSCALE_TRACE_CONSOLE=1, and nowhere otherwise.
"""

import logging
import os

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def setup_logging() -> None:
    level_name = os.getenv("RANKSCALE_LOG_LEVEL", "INFO").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.INFO
        print(f"⚠️  Unknown RANKSCALE_LOG_LEVEL={level_name!r}, using INFO")
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)


def setup_observability() -> bool:
    """Configure logging and install a tracer provider.

    Returns True if span export is active, False otherwise.
    """
    setup_logging()
    try:
        from opentelemetry import trace
        from opentelemetry.sdk.resources import Resource
        from opentelemetry.sdk.trace import TracerProvider
        from opentelemetry.sdk.trace.export import (
            BatchSpanProcessor,
            ConsoleSpanExporter,
            SimpleSpanProcessor,
        )

        provider = TracerProvider(resource=Resource.create({"service.name": "rankscale"}))
        endpoint = os.getenv("OTEL_EXPORTER_OTLP_ENDPOINT")
        exporting = False
        if endpoint:
            from opentelemetry.exporter.otlp.proto.grpc.trace_exporter import OTLPSpanExporter

            provider.add_span_processor(BatchSpanProcessor(OTLPSpanExporter(endpoint=endpoint, insecure=True)))
            print(f"🔭 Exporting spans to {endpoint}")
            exporting = True
        elif os.getenv("RANKSCALE_TRACE_CONSOLE") == "1":
            provider.add_span_processor(SimpleSpanProcessor(ConsoleSpanExporter()))
            print("🔭 Printing spans to stdout")
            exporting = True
        trace.set_tracer_provider(provider)
        if exporting:
            print("✅ OpenTelemetry tracing active")
        return exporting

    except ImportError as e:
        print(f"⚠️  Tracing not available: {e}")
        print("   Install: pip install opentelemetry-sdk opentelemetry-exporter-otlp-proto-grpc")
        return False
    except Exception as e:
        print(f"⚠️  Tracing setup failed: {e}")
        return False
