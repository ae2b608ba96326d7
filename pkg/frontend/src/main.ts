// Entry point: wires the chat view to the page. Query parameters:
//   ?variant=MixGlobal|MixLocal|TaskGlobal   (default MixGlobal)
//   ?debug=1                                  show strategy badges

import { ChatApi } from "./api.js";
import { ChatView } from "./chat.js";

export function boot(root: HTMLElement, base = ""): ChatView {
  const params = new URLSearchParams(window.location.search);
  const view = new ChatView(root, new ChatApi(base), {
    variant: params.get("variant") ?? "MixGlobal",
    debug: params.get("debug") === "1",
  });
  void view.start();
  return view;
}

if (typeof document !== "undefined") {
  const root = document.getElementById("chat");
  if (root) boot(root);
}
