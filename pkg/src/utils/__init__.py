"""Configuration, error types, artifact protocol and stage timing."""
