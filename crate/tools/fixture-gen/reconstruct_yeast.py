from collections import Counter, defaultdict
def load(f):
    rows=[]
    for line in open(f):
        line=line.strip()
        if not line or line.startswith("@"): continue
        p=[s.strip() for s in line.split(",")]
        rows.append((tuple("%.2f"%float(v) for v in p[:-1]),p[-1]))
    return rows
def counts(f,which):
    return Counter(x for x,c in load(f) if c==which)
base=load("yeast1.dat")
group=Counter(x for x,_ in base)
lab=defaultdict(Counter)
for k,name in [(1,"NUC"),(3,"ME3"),(4,"ME2"),(5,"ME1"),(6,"EXC")]:
    for x,n in counts(f"yeast{k}.dat","positive").items(): lab[x][name]+=n
def add(f,which,name,minus=()):
    for x,n in counts(f,which).items():
        n-=sum(lab[x][m] for m in minus)
        assert n>=0,(f,x)
        if n: lab[x][name]+=n
add("yeast-2_vs_4.dat","negative","CYT")
add("yeast-1-2-8-9_vs_7.dat","positive","VAC")
print("2vs8 neg",sum(counts("yeast-2_vs_8.dat","negative").values()))
add("yeast-2_vs_8.dat","positive","POX")
add("yeast-0-2-5-6_vs_3-7-8-9.dat","positive","ERL",minus=("ME1","VAC","POX"))
for x,g in group.items():
    s=sum(lab[x].values()); assert s<=g,(x,g,lab[x])
    if g>s: lab[x]["MIT"]+=g-s
tot=Counter()
for x in group: tot+=lab[x]
print(tot)
def check(f,pos,neg):
    p=counts(f,"positive"); n=counts(f,"negative"); bad=0
    for x in set(p)|set(n):
        if p[x]!=sum(lab[x][c] for c in pos) or n[x]!=sum(lab[x][c] for c in neg): bad+=1
    print(f,"bad",bad)
check("yeast-0-3-5-9_vs_7-8.dat",{"VAC","POX"},{"MIT","ME1","ME3","ERL"})
check("yeast-0-2-5-7-9_vs_3-6-8.dat",{"ME1","EXC","POX"},{"MIT","CYT","ME3","VAC","ERL"})
check("yeast-0-5-6-7-9_vs_4.dat",{"ME2"},{"MIT","ME3","EXC","VAC","ERL"})
check("yeast-1-4-5-8_vs_7.dat",{"VAC"},{"NUC","ME2","ME3","POX"})
check("yeast-2_vs_4.dat",{"ME2"},{"CYT"})
# emit in yeast1 order, consuming labels from each group's multiset in fixed class order
order=["CYT","NUC","MIT","ME3","ME2","ME1","EXC","VAC","POX","ERL"]
pool={x:[c for c in order for _ in range(lab[x][c])] for x in group}
with open("yeast.csv","w") as f:
    f.write("mcg,gvh,alm,mit,erl,pox,vac,nuc,class\n")
    for x,_ in base:
        f.write(",".join(x)+","+pool[x].pop(0)+"\n")
