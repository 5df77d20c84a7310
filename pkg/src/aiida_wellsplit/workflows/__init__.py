"""AiiDA well-splitting workflows module."""
