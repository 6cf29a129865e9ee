"""Instance generators: hardness-reduction chains, MCP instances, random models."""
