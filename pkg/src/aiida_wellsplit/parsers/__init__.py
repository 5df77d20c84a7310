"""AiiDA well-splitting parsers module."""
