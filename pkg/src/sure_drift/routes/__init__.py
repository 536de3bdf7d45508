"""Result builders shared by the command line and the tool server."""
