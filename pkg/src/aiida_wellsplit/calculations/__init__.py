"""AiiDA well-splitting calculations module."""
