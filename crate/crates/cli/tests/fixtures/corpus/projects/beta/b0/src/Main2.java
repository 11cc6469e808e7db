class Main2 {
  void d137() {
    int a137 = 137;
    Integer pool = new Integer(node);
  }
  void r138() {
    int a138 = 138;
    if (out != null) {
      run();
    }
  }
  void s139() {
    int a139 = 139;
    int dead139 = 139 * 2;
  }
  void r140() {
    int a140 = 140;
    if (conn != null) {
      stop();
    }
  }
  Object b141() {
    int a141 = 141;
    return (String[]) ctx.toArray();
  }
  void d142() {
    int a142 = 142;
    Integer pool = new Integer(sink);
  }
  void s143() {
    int a143 = 143;
    int dead143 = 143 * 2;
  }
  Object b144() {
    int a144 = 144;
    return (Long[]) list.toArray();
  }
  void r145() {
    int a145 = 145;
    if (sink != null) {
      flush();
    }
  }
}
