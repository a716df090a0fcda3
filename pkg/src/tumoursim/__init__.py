"""Moving-boundary biphasic tumour growth on a fixed triangulation."""
